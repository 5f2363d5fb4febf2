//! Armington trade-share response.
//!
//! Preference weights are calibrated so that the share rule reproduces the
//! baseline trade shares at unit delivered prices. With producer prices
//! normalized to 1 in the baseline, the implied weight for each
//! `(origin, destination, commodity)` is just the baseline share itself,
//! and the counterfactual share is
//!
//! `s(o,d,y) = s0(o,d,y) * p(o,d,y)^(1-sigma_y) / sum_k s0(k,d,y) * p(k,d,y)^(1-sigma_y)`.

use crate::error::{Error, Result};
use crate::world::{BilateralTensor, TradeShares};

#[derive(Debug, Clone)]
pub struct ArmingtonParams {
    /// Elasticity of substitution per commodity, each > 1.
    sigma: Vec<f64>,
    /// Baseline shares; at unit prices these double as the preference
    /// weights a^sigma.
    base: TradeShares,
}

impl ArmingtonParams {
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn base_shares(&self) -> &TradeShares {
        &self.base
    }
}

/// Calibrate preference weights from baseline shares.
pub fn calibrate(base: &TradeShares, sigma: &[f64]) -> Result<ArmingtonParams> {
    if sigma.len() != base.n_sectors() {
        return Err(Error::Dimension(format!(
            "sigma has {} entries, expected one per sector ({})",
            sigma.len(),
            base.n_sectors()
        )));
    }
    for (y, s) in sigma.iter().enumerate() {
        if !(*s > 1.0) {
            return Err(Error::Invalid(format!(
                "sigma for commodity {y} is {s}; must be > 1"
            )));
        }
    }
    Ok(ArmingtonParams {
        sigma: sigma.to_vec(),
        base: base.clone(),
    })
}

/// Delivered prices `p(o,d,y) = producer_price(o,y) * (1 + wedge(o,d,y))`,
/// with producer prices expressed as `1 + price_delta`.
pub fn delivered_prices(price_delta: &[f64], wedge: &BilateralTensor) -> Result<BilateralTensor> {
    let nc = wedge.n_countries();
    let ns = wedge.n_sectors();
    if price_delta.len() != nc * ns {
        return Err(Error::Dimension(format!(
            "price delta length {} does not match {}x{} world",
            price_delta.len(),
            nc,
            ns
        )));
    }
    let mut prices = BilateralTensor::zeros(nc, ns);
    for d in 0..nc {
        for y in 0..ns {
            for o in 0..nc {
                let p = (1.0 + price_delta[o * ns + y]) * (1.0 + wedge.get(o, d, y));
                if !(p > 0.0) {
                    return Err(Error::Invalid(format!(
                        "delivered price for origin {o}, destination {d}, commodity {y} is {p}"
                    )));
                }
                prices.set(o, d, y, p);
            }
        }
    }
    Ok(prices)
}

/// Recompute the trade-share matrix under the given delivered prices.
/// Zero baseline shares stay zero; every column re-normalizes to 1.
pub fn update_shares(params: &ArmingtonParams, prices: &BilateralTensor) -> Result<TradeShares> {
    let base = params.base.tensor();
    if !base.same_shape(prices) {
        return Err(Error::Dimension(
            "delivered prices do not match baseline share shape".into(),
        ));
    }
    let nc = base.n_countries();
    let ns = base.n_sectors();
    let mut out = BilateralTensor::zeros(nc, ns);
    for d in 0..nc {
        for y in 0..ns {
            let exponent = 1.0 - params.sigma[y];
            let bcol = base.column(d, y);
            let pcol = prices.column(d, y);
            let ocol = out.column_mut(d, y);
            let mut total = 0.0;
            for o in 0..nc {
                let s0 = bcol[o];
                if s0 == 0.0 {
                    continue;
                }
                let p = pcol[o];
                if !(p > 0.0) {
                    return Err(Error::Invalid(format!(
                        "non-positive delivered price {p} at origin {o}, destination {d}, commodity {y}"
                    )));
                }
                let v = s0 * p.powf(exponent);
                ocol[o] = v;
                total += v;
            }
            if total <= 0.0 {
                return Err(Error::Invalid(format!(
                    "degenerate share column: destination {d}, commodity {y}"
                )));
            }
            for v in ocol.iter_mut() {
                *v /= total;
            }
        }
    }
    TradeShares::from_stochastic(out)
}
