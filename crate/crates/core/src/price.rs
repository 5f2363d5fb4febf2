//! Cost-push price propagation and the price response of final demand.
//!
//! Tariffs on imported intermediates raise unit costs directly
//! (`tariff_cost_shock`), the cost-push dual spreads that through the
//! production structure (`propagate_prices`), and final demand reacts to
//! the resulting consumer price level (`demand_response`).
//!
//! Tariffs enter final demand only through the consumer price index
//! (`consumer_price_delta`), never through the intermediate cost shock for
//! the same purchase, so a single tariff is never double-counted:
//! `cp(d,y) = dp(d,y) + sum_o t(o,d,y) * wedge(o,d,y)`.

use crate::error::{Error, Result};
use crate::world::{
    solve_series, BilateralTensor, BlockDiag, DemandVector, TradeShares, LINEAR_SOLVE_MAX_ITER,
    LINEAR_SOLVE_TOL,
};

/// Price response of final demand: own-price elasticity per commodity,
/// each <= 0, with 0 meaning fixed demand.
#[derive(Debug, Clone)]
pub struct DemandResponse {
    epsilon: Vec<f64>,
    base_fd: DemandVector,
}

impl DemandResponse {
    pub fn new(epsilon: Vec<f64>, base_fd: DemandVector) -> Result<Self> {
        for (y, e) in epsilon.iter().enumerate() {
            if !e.is_finite() || *e > 0.0 {
                return Err(Error::Invalid(format!(
                    "demand elasticity for commodity {y} is {e}; must be finite and <= 0"
                )));
            }
        }
        Ok(DemandResponse { epsilon, base_fd })
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn base_fd(&self) -> &DemandVector {
        &self.base_fd
    }
}

/// Direct unit-cost increase per destination sector from tariffs on
/// imported intermediates:
/// `dpm(d,j) = sum_y A_d[y,j] * sum_[o != d] t(o,d,y) * wedge(o,d,y)`.
pub fn tariff_cost_shock(a: &BlockDiag, t: &TradeShares, wedge: &BilateralTensor) -> Result<Vec<f64>> {
    let nc = a.n_countries();
    let ns = a.n_sectors();
    if t.n_countries() != nc || t.n_sectors() != ns || wedge.n_countries() != nc || wedge.n_sectors() != ns
    {
        return Err(Error::Dimension("tariff cost shock: inconsistent shapes".into()));
    }
    // share-weighted tariff paid on commodity y delivered into d
    let mut tariff_weight = vec![0.0; nc * ns];
    for d in 0..nc {
        for y in 0..ns {
            let mut acc = 0.0;
            for o in 0..nc {
                if o == d {
                    continue;
                }
                acc += t.get(o, d, y) * wedge.get(o, d, y);
            }
            tariff_weight[d * ns + y] = acc;
        }
    }
    let mut dpm = vec![0.0; nc * ns];
    a.apply_transpose(&tariff_weight, &mut dpm);
    Ok(dpm)
}

/// Full cost pass-through: solves `(I - (T A)') dp = dpm`.
pub fn propagate_prices(a: &BlockDiag, t: &TradeShares, dpm: &[f64]) -> Result<Vec<f64>> {
    let dim = a.dim();
    if dpm.len() != dim || t.n_countries() != a.n_countries() || t.n_sectors() != a.n_sectors() {
        return Err(Error::Dimension("price propagation: inconsistent shapes".into()));
    }
    solve_series(
        |v, out| {
            // (T A)' v = A' (T' v)
            let mut tv = vec![0.0; v.len()];
            t.apply_transpose(v, &mut tv);
            a.apply_transpose(&tv, out);
        },
        dpm,
        LINEAR_SOLVE_TOL,
        LINEAR_SOLVE_MAX_ITER,
    )
}

/// Consumer price delta per destination commodity: the domestic producer
/// price delta plus the share-weighted tariff on final purchases.
pub fn consumer_price_delta(
    t: &TradeShares,
    price_delta: &[f64],
    wedge: &BilateralTensor,
) -> Result<Vec<f64>> {
    let nc = t.n_countries();
    let ns = t.n_sectors();
    if price_delta.len() != nc * ns || wedge.n_countries() != nc || wedge.n_sectors() != ns {
        return Err(Error::Dimension("consumer price delta: inconsistent shapes".into()));
    }
    let mut cp = vec![0.0; nc * ns];
    for d in 0..nc {
        for y in 0..ns {
            let mut tariff = 0.0;
            for o in 0..nc {
                if o == d {
                    continue;
                }
                tariff += t.get(o, d, y) * wedge.get(o, d, y);
            }
            cp[d * ns + y] = price_delta[d * ns + y] + tariff;
        }
    }
    Ok(cp)
}

/// Isoelastic demand: `fd(i) = base_fd(i) * (1 + cp(i))^epsilon_y(i)`.
pub fn demand_response(resp: &DemandResponse, price_delta: &[f64]) -> Result<DemandVector> {
    let base = resp.base_fd.values();
    if price_delta.len() != base.len() {
        return Err(Error::Dimension(format!(
            "price delta length {} vs demand length {}",
            price_delta.len(),
            base.len()
        )));
    }
    let ns = resp.epsilon.len();
    if base.len() % ns != 0 {
        return Err(Error::Dimension(
            "epsilon vector does not divide demand dimension".into(),
        ));
    }
    let mut fd = Vec::with_capacity(base.len());
    for (i, (b, dp)) in base.iter().zip(price_delta).enumerate() {
        let level = 1.0 + dp;
        if !(level > 0.0) {
            return Err(Error::Invalid(format!(
                "price level {level} at cell {i}; must be positive"
            )));
        }
        let eps = resp.epsilon[i % ns];
        let v = if eps == 0.0 { *b } else { b * level.powf(eps) };
        fd.push(v);
    }
    DemandVector::new(fd)
}
