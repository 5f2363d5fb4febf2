//! Damped fixed-point solver for the interdependent system: trade shares
//! respond to delivered prices, prices to tariff-inflated input costs,
//! final demand to consumer prices, and output to demand and shares.
//!
//! The sweep order is shares -> prices -> demand -> output, damped on the
//! share and price blocks. Convergence is the max over blocks of the
//! max-norm relative change between successive iterates.

use crate::armington::{calibrate, delivered_prices, update_shares, ArmingtonParams};
use crate::data::WorldDataset;
use crate::error::{Error, Result};
use crate::price::{consumer_price_delta, demand_response, propagate_prices, tariff_cost_shock, DemandResponse};
use crate::world::{compute_trade_flows, solve_production, BilateralTensor, DemandVector, TradeFlows, TradeShares};

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Convergence threshold on the max relative change of T, price delta,
    /// and output between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Damping applied to the share and price updates, in (0, 1].
    pub damping: f64,
    /// Emit one progress line per iteration to standard error.
    pub progress: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_iterations: 200,
            damping: 0.5,
            progress: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Invalid(format!(
                "solver tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Invalid(format!(
                "damping must be in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Elasticities of the behavioural blocks, one entry per commodity.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Armington elasticity of substitution, each > 1. Default 4.0.
    pub sigma: Vec<f64>,
    /// Own-price final-demand elasticity, each <= 0. Default -0.5.
    pub epsilon: Vec<f64>,
}

impl ModelParams {
    pub fn uniform(n_sectors: usize, sigma: f64, epsilon: f64) -> Self {
        ModelParams {
            sigma: vec![sigma; n_sectors],
            epsilon: vec![epsilon; n_sectors],
        }
    }

    pub fn defaults(n_sectors: usize) -> Self {
        Self::uniform(n_sectors, 4.0, -0.5)
    }
}

/// Max-norm relative changes of the three solved blocks at the last
/// iteration.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlockResiduals {
    pub trade_shares: f64,
    pub prices: f64,
    pub output: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        self.trade_shares.max(self.prices).max(self.output)
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub trade_shares: TradeShares,
    /// Producer price deltas per origin cell.
    pub price_delta: Vec<f64>,
    /// Consumer price deltas per destination commodity (producer delta
    /// plus share-weighted tariff on final purchases).
    pub consumer_price_delta: Vec<f64>,
    pub fd: DemandVector,
    pub x: Vec<f64>,
    pub flows: TradeFlows,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: BlockResiduals,
}

fn max_rel_change(new: &[f64], old: &[f64], scale_floor: f64) -> f64 {
    let old_norm = old.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let denom = old_norm.max(scale_floor);
    let mut worst = 0.0f64;
    for (n, o) in new.iter().zip(old) {
        worst = worst.max((n - o).abs());
    }
    worst / denom
}

/// Baseline solve: zero tariffs. Returns the calibrated data unchanged
/// (up to solver precision) in a single iteration.
pub fn solve_baseline(world: &WorldDataset) -> Result<EquilibriumState> {
    let zero = BilateralTensor::zeros(world.dims.n_countries(), world.dims.n_sectors());
    let params = ModelParams::defaults(world.dims.n_sectors());
    solve_scenario(world, &params, &zero, &SolverConfig::default())
}

/// Solve the tariff counterfactual. `wedge(o,d,y)` is the proportional
/// delivered-price increase applied on top of the baseline.
pub fn solve_scenario(
    world: &WorldDataset,
    params: &ModelParams,
    wedge: &BilateralTensor,
    cfg: &SolverConfig,
) -> Result<EquilibriumState> {
    cfg.validate()?;
    let nc = world.dims.n_countries();
    let ns = world.dims.n_sectors();
    if wedge.n_countries() != nc || wedge.n_sectors() != ns {
        return Err(Error::Dimension("tariff tensor does not match world".into()));
    }
    for d in 0..nc {
        for y in 0..ns {
            let v = wedge.get(d, d, y);
            if v != 0.0 {
                return Err(Error::Invalid(format!(
                    "self-tariff on country {d}, commodity {y}"
                )));
            }
        }
    }

    let arm: ArmingtonParams = calibrate(&world.trade_shares, &params.sigma)?;
    let resp = DemandResponse::new(params.epsilon.clone(), world.fd.clone())?;

    let mut t = world.trade_shares.clone();
    let mut dp = vec![0.0; world.dims.dim()];
    let mut fd = world.fd.clone();
    let mut x = world.gross_output.clone();

    let mut residuals = BlockResiduals::default();
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_residual = f64::INFINITY;
    let mut growth_streak = 0usize;

    for iter in 1..=cfg.max_iterations {
        iterations = iter;

        // (1) delivered prices from current producer prices plus tariffs
        let prices = delivered_prices(&dp, wedge)?;
        // (2) Armington share update, damped
        let t_target = update_shares(&arm, &prices)?;
        let t_new = t.damped_towards(&t_target, cfg.damping);
        // (3) cost-push price propagation, damped
        let dpm = tariff_cost_shock(&world.a, &t_new, wedge)?;
        let dp_target = propagate_prices(&world.a, &t_new, &dpm)?;
        let dp_new: Vec<f64> = dp
            .iter()
            .zip(&dp_target)
            .map(|(o, n)| o + cfg.damping * (n - o))
            .collect();
        // (4) demand response to consumer prices
        let cp = consumer_price_delta(&t_new, &dp_new, wedge)?;
        let fd_new = demand_response(&resp, &cp)?;
        // (5) production solve
        let x_new = solve_production(&world.a, &t_new, &fd_new)?;

        residuals = BlockResiduals {
            trade_shares: t_new.tensor().max_abs_diff(t.tensor()),
            prices: max_rel_change(&dp_new, &dp, 1.0),
            output: max_rel_change(&x_new, &x, 1e-300),
        };

        t = t_new;
        dp = dp_new;
        fd = fd_new;
        x = x_new;

        let residual = residuals.max();
        if cfg.progress {
            eprintln!("iteration {iter}: residual {residual:.3e}");
        }
        if residual < cfg.tolerance {
            converged = true;
            break;
        }
        if residual > prev_residual {
            growth_streak += 1;
            if growth_streak >= 10 {
                return Err(Error::Diverged {
                    iteration: iter,
                    residual,
                    streak: growth_streak,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_residual = residual;
    }

    // (6) trade flows at the final state
    let flows = compute_trade_flows(&t, &world.a, &x, &fd)?;
    let consumer = consumer_price_delta(&t, &dp, wedge)?;
    Ok(EquilibriumState {
        trade_shares: t,
        price_delta: dp,
        consumer_price_delta: consumer,
        fd,
        x,
        flows,
        iterations,
        converged,
        residuals,
    })
}

/// Per-cell absolute and percentage change of one quantity. Percentage is
/// absent when the baseline is zero.
#[derive(Debug, Clone)]
pub struct DeltaSeries {
    pub baseline: Vec<f64>,
    pub delta: Vec<f64>,
    pub pct: Vec<Option<f64>>,
}

impl DeltaSeries {
    fn between(base: &[f64], shocked: &[f64]) -> Self {
        let delta: Vec<f64> = shocked.iter().zip(base).map(|(s, b)| s - b).collect();
        let pct = delta
            .iter()
            .zip(base)
            .map(|(d, b)| {
                if *b == 0.0 {
                    None
                } else {
                    Some(100.0 * d / b)
                }
            })
            .collect();
        DeltaSeries {
            baseline: base.to_vec(),
            delta,
            pct,
        }
    }
}

/// Baseline-versus-scenario differences on output, final demand, and
/// exports, at country-sector resolution plus country aggregates.
#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub output: DeltaSeries,
    pub fd: DeltaSeries,
    pub exports_by_cell: DeltaSeries,
    pub exports_by_country: DeltaSeries,
    pub imports_by_country: DeltaSeries,
}

pub fn diff_states(base: &EquilibriumState, shocked: &EquilibriumState) -> Result<DeltaReport> {
    if base.x.len() != shocked.x.len() {
        return Err(Error::Dimension("states solved on different dimensions".into()));
    }
    Ok(DeltaReport {
        output: DeltaSeries::between(&base.x, &shocked.x),
        fd: DeltaSeries::between(base.fd.values(), shocked.fd.values()),
        exports_by_cell: DeltaSeries::between(
            &base.flows.exports_by_cell,
            &shocked.flows.exports_by_cell,
        ),
        exports_by_country: DeltaSeries::between(
            &base.flows.exports_by_country,
            &shocked.flows.exports_by_country,
        ),
        imports_by_country: DeltaSeries::between(
            &base.flows.imports_by_country,
            &shocked.flows.imports_by_country,
        ),
    })
}
