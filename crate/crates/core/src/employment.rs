//! Employment satellite account: jobs per unit of output and the
//! labour-group decomposition of employment changes.
//!
//! Employment coefficients are in thousands of jobs per unit of gross
//! output and stay fixed at their baseline values; the employment channel
//! is output-driven only.

use crate::error::{Error, Result};
use crate::income::IncomeGroups;
use crate::world::WorldDims;

/// The four binary labour-group partitions carried by the satellite, in
/// the column order of the satellite CSV.
pub const PARTITIONS: [(&str, [&str; 2]); 4] = [
    ("Formality", ["Formal", "Informal"]),
    ("Skill", ["Skilled", "Unskilled"]),
    ("Age", ["Adult", "Youth"]),
    ("Sex", ["Male", "Female"]),
];

pub const SHARE_COLUMNS: usize = 8;

/// Pair-of-shares tolerance within each partition cell.
pub const SHARE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EmploymentSatellite {
    n_countries: usize,
    n_sectors: usize,
    /// Thousands of jobs per unit of gross output, length `Nn`.
    coefficients: Vec<f64>,
    /// Eight group shares per cell, partition-major: cell * 8 + column.
    shares: Vec<f64>,
}

impl EmploymentSatellite {
    pub fn new(
        n_countries: usize,
        n_sectors: usize,
        coefficients: Vec<f64>,
        shares: Vec<f64>,
    ) -> Result<Self> {
        let dim = n_countries * n_sectors;
        if coefficients.len() != dim || shares.len() != dim * SHARE_COLUMNS {
            return Err(Error::Dimension(format!(
                "satellite: {} coefficients and {} share values for dimension {dim}",
                coefficients.len(),
                shares.len()
            )));
        }
        let mut violations = Vec::new();
        for (i, c) in coefficients.iter().enumerate() {
            if *c < 0.0 || !c.is_finite() {
                violations.push(format!("cell {i}: employment coefficient {c} < 0"));
            }
        }
        for i in 0..dim {
            for p in 0..4 {
                let a = shares[i * SHARE_COLUMNS + 2 * p];
                let b = shares[i * SHARE_COLUMNS + 2 * p + 1];
                if a < 0.0 || b < 0.0 || (a + b - 1.0).abs() > SHARE_SUM_TOL {
                    violations.push(format!(
                        "cell {i}: {} shares ({a}, {b}) do not sum to 1",
                        PARTITIONS[p].0
                    ));
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(EmploymentSatellite {
            n_countries,
            n_sectors,
            coefficients,
            shares,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn share(&self, cell: usize, column: usize) -> f64 {
        self.shares[cell * SHARE_COLUMNS + column]
    }

    pub fn shares_raw(&self) -> &[f64] {
        &self.shares
    }

    pub fn dim(&self) -> usize {
        self.n_countries * self.n_sectors
    }

    /// Employment levels `L = coefficients * x`, element-wise.
    pub fn levels(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "output vector length {} vs satellite dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(x)
            .map(|(c, xv)| c * xv)
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct GroupAggregate {
    pub name: String,
    pub baseline: f64,
    pub delta: f64,
    /// None when the baseline is zero (absolute-only reporting).
    pub pct: Option<f64>,
}

fn pct(delta: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        None
    } else {
        Some(100.0 * delta / base)
    }
}

#[derive(Debug, Clone)]
pub struct EmploymentReport {
    pub cell_baseline: Vec<f64>,
    pub cell_delta: Vec<f64>,
    pub by_country: Vec<GroupAggregate>,
    pub by_sector: Vec<GroupAggregate>,
    pub by_income_group: Vec<GroupAggregate>,
    /// Share (in %) of net losses per labour group, paired per partition;
    /// each pair sums to 100 when any cell lost employment.
    pub loss_distribution: [[f64; 2]; 4],
    pub total_baseline: f64,
    pub total_delta: f64,
}

/// Employment change report between two solved output vectors.
pub fn employment_delta(
    sat: &EmploymentSatellite,
    dims: &WorldDims,
    groups: &IncomeGroups,
    base_x: &[f64],
    shocked_x: &[f64],
) -> Result<EmploymentReport> {
    if dims.dim() != sat.dim() || base_x.len() != sat.dim() || shocked_x.len() != sat.dim() {
        return Err(Error::Dimension("employment delta: inconsistent shapes".into()));
    }
    let base_l = sat.levels(base_x)?;
    let shocked_l = sat.levels(shocked_x)?;
    let cell_delta: Vec<f64> = shocked_l.iter().zip(&base_l).map(|(s, b)| s - b).collect();

    let nc = dims.n_countries();
    let ns = dims.n_sectors();
    let mut country_base = vec![0.0; nc];
    let mut country_delta = vec![0.0; nc];
    let mut sector_base = vec![0.0; ns];
    let mut sector_delta = vec![0.0; ns];
    for c in 0..nc {
        for s in 0..ns {
            let i = c * ns + s;
            country_base[c] += base_l[i];
            country_delta[c] += cell_delta[i];
            sector_base[s] += base_l[i];
            sector_delta[s] += cell_delta[i];
        }
    }

    let by_country = dims
        .country_codes()
        .iter()
        .enumerate()
        .map(|(c, code)| GroupAggregate {
            name: code.clone(),
            baseline: country_base[c],
            delta: country_delta[c],
            pct: pct(country_delta[c], country_base[c]),
        })
        .collect();
    let by_sector = dims
        .sector_codes()
        .iter()
        .enumerate()
        .map(|(s, code)| GroupAggregate {
            name: code.clone(),
            baseline: sector_base[s],
            delta: sector_delta[s],
            pct: pct(sector_delta[s], sector_base[s]),
        })
        .collect();
    let group_base = groups.aggregate(&country_base);
    let group_delta = groups.aggregate(&country_delta);
    let by_income_group = groups
        .group_names()
        .iter()
        .enumerate()
        .map(|(g, name)| GroupAggregate {
            name: name.clone(),
            baseline: group_base[g],
            delta: group_delta[g],
            pct: pct(group_delta[g], group_base[g]),
        })
        .collect();

    // Distribution of net losses over labour groups, per Table-6 logic:
    // only cells with a net loss contribute.
    let mut loss_distribution = [[0.0; 2]; 4];
    let mut total_losses = 0.0;
    for (i, d) in cell_delta.iter().enumerate() {
        if *d < 0.0 {
            let loss = -d;
            total_losses += loss;
            for p in 0..4 {
                loss_distribution[p][0] += loss * sat.share(i, 2 * p);
                loss_distribution[p][1] += loss * sat.share(i, 2 * p + 1);
            }
        }
    }
    if total_losses > 0.0 {
        for pair in loss_distribution.iter_mut() {
            pair[0] *= 100.0 / total_losses;
            pair[1] *= 100.0 / total_losses;
        }
    }

    Ok(EmploymentReport {
        total_baseline: base_l.iter().sum(),
        total_delta: cell_delta.iter().sum(),
        cell_baseline: base_l,
        cell_delta,
        by_country,
        by_sector,
        by_income_group,
        loss_distribution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankDimension {
    Country,
    Sector,
}

#[derive(Debug, Clone)]
pub struct RankedTable {
    pub rows: Vec<GroupAggregate>,
    pub subtotal_baseline: f64,
    pub subtotal_delta: f64,
    pub total_baseline: f64,
    pub total_delta: f64,
}

/// Top-k most affected countries or sectors: sorted ascending by delta
/// (most negative first), ties broken by code order.
pub fn top_k(report: &EmploymentReport, dimension: RankDimension, k: usize) -> Result<RankedTable> {
    if k == 0 {
        return Err(Error::Invalid("top_k requires k >= 1".into()));
    }
    let pool = match dimension {
        RankDimension::Country => &report.by_country,
        RankDimension::Sector => &report.by_sector,
    };
    let mut order: Vec<usize> = (0..pool.len()).collect();
    // stable sort keeps code order for equal deltas
    order.sort_by(|a, b| pool[*a].delta.partial_cmp(&pool[*b].delta).unwrap());
    let rows: Vec<GroupAggregate> = order
        .iter()
        .take(k)
        .map(|i| pool[*i].clone())
        .collect();
    let subtotal_baseline = rows.iter().map(|r| r.baseline).sum();
    let subtotal_delta = rows.iter().map(|r| r.delta).sum();
    Ok(RankedTable {
        rows,
        subtotal_baseline,
        subtotal_delta,
        total_baseline: pool.iter().map(|r| r.baseline).sum(),
        total_delta: pool.iter().map(|r| r.delta).sum(),
    })
}
