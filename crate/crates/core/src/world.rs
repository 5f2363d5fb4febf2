//! World dimensions and the block-structured MRIO matrices.
//!
//! All global matrices are `Nn x Nn` with flat index `country * n + sector`.
//! The intermediate matrix `Z` and the technical-coefficient matrix `A` are
//! block-diagonal by destination country, so they are stored as `N` dense
//! `n x n` blocks. The allocation matrix `ALL` and the trade-share matrix `T`
//! only couple the same commodity across countries, so they are stored as an
//! `(origin, destination, commodity)` tensor.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Column sums of `T` must equal 1 to this tolerance after every
/// construction or update.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Outputs more negative than this are an error; anything in `[-CLAMP, 0)`
/// is floating-point noise and gets clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct WorldDims {
    country_codes: Vec<String>,
    sector_codes: Vec<String>,
    country_index: HashMap<String, usize>,
    sector_index: HashMap<String, usize>,
}

impl WorldDims {
    pub fn new(country_codes: Vec<String>, sector_codes: Vec<String>) -> Result<Self> {
        if country_codes.is_empty() || sector_codes.is_empty() {
            return Err(Error::Invalid(
                "need at least one country and one sector".into(),
            ));
        }
        let mut country_index = HashMap::new();
        for (i, c) in country_codes.iter().enumerate() {
            if country_index.insert(c.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate country code {c:?}")));
            }
        }
        let mut sector_index = HashMap::new();
        for (i, s) in sector_codes.iter().enumerate() {
            if sector_index.insert(s.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate sector code {s:?}")));
            }
        }
        Ok(WorldDims {
            country_codes,
            sector_codes,
            country_index,
            sector_index,
        })
    }

    /// Synthetic codes `C000..` / `S000..` for generated fixtures.
    pub fn synthetic(n_countries: usize, n_sectors: usize) -> Result<Self> {
        WorldDims::new(
            (0..n_countries).map(|c| format!("C{c:03}")).collect(),
            (0..n_sectors).map(|s| format!("S{s:03}")).collect(),
        )
    }

    pub fn n_countries(&self) -> usize {
        self.country_codes.len()
    }

    pub fn n_sectors(&self) -> usize {
        self.sector_codes.len()
    }

    /// Total flat dimension `N * n`.
    pub fn dim(&self) -> usize {
        self.country_codes.len() * self.sector_codes.len()
    }

    pub fn flat(&self, country: usize, sector: usize) -> usize {
        debug_assert!(country < self.n_countries() && sector < self.n_sectors());
        country * self.n_sectors() + sector
    }

    pub fn country_codes(&self) -> &[String] {
        &self.country_codes
    }

    pub fn sector_codes(&self) -> &[String] {
        &self.sector_codes
    }

    pub fn country(&self, code: &str) -> Option<usize> {
        self.country_index.get(code).copied()
    }

    pub fn sector(&self, code: &str) -> Option<usize> {
        self.sector_index.get(code).copied()
    }

    pub fn same_shape(&self, other: &WorldDims) -> bool {
        self.country_codes == other.country_codes && self.sector_codes == other.sector_codes
    }
}

/// Commodity-level final demand by destination, length `Nn`, all entries >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandVector(pub Vec<f64>);

impl DemandVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "final demand entry {i} is {}, must be finite and >= 0",
                values[i]
            )));
        }
        Ok(DemandVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Block-diagonal `Nn x Nn` matrix: one dense `n x n` block per country.
/// Used for both the intermediate flow matrix `Z` and the technical
/// coefficients `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiag {
    n_countries: usize,
    n_sectors: usize,
    // block-major: vals[(c*n + row)*n + col]
    vals: Vec<f64>,
}

impl BlockDiag {
    pub fn zeros(n_countries: usize, n_sectors: usize) -> Self {
        BlockDiag {
            n_countries,
            n_sectors,
            vals: vec![0.0; n_countries * n_sectors * n_sectors],
        }
    }

    pub fn n_countries(&self) -> usize {
        self.n_countries
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn dim(&self) -> usize {
        self.n_countries * self.n_sectors
    }

    #[inline]
    fn idx(&self, country: usize, row: usize, col: usize) -> usize {
        (country * self.n_sectors + row) * self.n_sectors + col
    }

    #[inline]
    pub fn get(&self, country: usize, row: usize, col: usize) -> f64 {
        self.vals[self.idx(country, row, col)]
    }

    #[inline]
    pub fn set(&mut self, country: usize, row: usize, col: usize, v: f64) {
        let i = self.idx(country, row, col);
        self.vals[i] = v;
    }

    /// `out = M v` where `v` is a flat `Nn` vector:
    /// `out[(c,row)] = sum_col M_c[row,col] * v[(c,col)]`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n_sectors;
        for c in 0..self.n_countries {
            let vb = &v[c * n..(c + 1) * n];
            let ob = &mut out[c * n..(c + 1) * n];
            for row in 0..n {
                let mrow = &self.vals[(c * n + row) * n..(c * n + row + 1) * n];
                let mut acc = 0.0;
                for col in 0..n {
                    acc += mrow[col] * vb[col];
                }
                ob[row] = acc;
            }
        }
    }

    /// `out = M' v` (transpose apply).
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n_sectors;
        for c in 0..self.n_countries {
            let vb = &v[c * n..(c + 1) * n];
            let ob = &mut out[c * n..(c + 1) * n];
            ob.fill(0.0);
            for row in 0..n {
                let mrow = &self.vals[(c * n + row) * n..(c * n + row + 1) * n];
                let s = vb[row];
                for col in 0..n {
                    ob[col] += mrow[col] * s;
                }
            }
        }
    }

    /// Flat column sums, length `Nn`.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.n_sectors;
        let mut out = vec![0.0; self.dim()];
        for c in 0..self.n_countries {
            for row in 0..n {
                for col in 0..n {
                    out[c * n + col] += self.get(c, row, col);
                }
            }
        }
        out
    }

    /// Technical coefficients `A[i][j] = Z[i][j] / x[j]` per destination
    /// block. Zero-output columns must be all-zero in `Z` and map to
    /// all-zero coefficient columns.
    pub fn coefficients(z: &BlockDiag, gross_output: &[f64]) -> Result<BlockDiag> {
        if gross_output.len() != z.dim() {
            return Err(Error::Dimension(format!(
                "gross output has length {}, expected {}",
                gross_output.len(),
                z.dim()
            )));
        }
        let n = z.n_sectors;
        let mut a = BlockDiag::zeros(z.n_countries, z.n_sectors);
        for c in 0..z.n_countries {
            for col in 0..n {
                let x = gross_output[c * n + col];
                for row in 0..n {
                    let flow = z.get(c, row, col);
                    if flow < 0.0 {
                        return Err(Error::Invalid(format!(
                            "negative intermediate flow at country {c}, row {row}, col {col}"
                        )));
                    }
                    if flow > 0.0 {
                        if x <= 0.0 {
                            return Err(Error::Invalid(format!(
                                "nonzero Z column (country {c}, sector {col}) with zero gross output"
                            )));
                        }
                        a.set(c, row, col, flow / x);
                    }
                }
            }
        }
        Ok(a)
    }
}

/// Dense `(origin, destination, commodity)` tensor. Represents anything with
/// the `ALL`/`T` coupling pattern: allocation flows, trade shares, tariff
/// wedges, delivered prices, bilateral flows.
///
/// Layout: the origin slice for a fixed `(destination, commodity)` column is
/// contiguous, which is the access pattern of normalization and share
/// updates.
#[derive(Debug, Clone, PartialEq)]
pub struct BilateralTensor {
    n_countries: usize,
    n_sectors: usize,
    // vals[(d*n + y)*N + o]
    vals: Vec<f64>,
}

impl BilateralTensor {
    pub fn zeros(n_countries: usize, n_sectors: usize) -> Self {
        BilateralTensor {
            n_countries,
            n_sectors,
            vals: vec![0.0; n_countries * n_countries * n_sectors],
        }
    }

    pub fn filled(n_countries: usize, n_sectors: usize, v: f64) -> Self {
        BilateralTensor {
            n_countries,
            n_sectors,
            vals: vec![v; n_countries * n_countries * n_sectors],
        }
    }

    pub fn n_countries(&self) -> usize {
        self.n_countries
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    #[inline]
    fn col_start(&self, dest: usize, commodity: usize) -> usize {
        (dest * self.n_sectors + commodity) * self.n_countries
    }

    #[inline]
    pub fn get(&self, origin: usize, dest: usize, commodity: usize) -> f64 {
        self.vals[self.col_start(dest, commodity) + origin]
    }

    #[inline]
    pub fn set(&mut self, origin: usize, dest: usize, commodity: usize, v: f64) {
        let i = self.col_start(dest, commodity) + origin;
        self.vals[i] = v;
    }

    /// Origin slice of one `(destination, commodity)` column.
    pub fn column(&self, dest: usize, commodity: usize) -> &[f64] {
        let s = self.col_start(dest, commodity);
        &self.vals[s..s + self.n_countries]
    }

    pub fn column_mut(&mut self, dest: usize, commodity: usize) -> &mut [f64] {
        let s = self.col_start(dest, commodity);
        &mut self.vals[s..s + self.n_countries]
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn same_shape(&self, other: &BilateralTensor) -> bool {
        self.n_countries == other.n_countries && self.n_sectors == other.n_sectors
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &BilateralTensor) -> f64 {
        self.vals
            .iter()
            .zip(&other.vals)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Column-stochastic trade-share matrix `T`: for every `(destination,
/// commodity)` the shares over origins sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeShares(BilateralTensor);

impl TradeShares {
    /// Normalize an allocation tensor into shares. Every `(destination,
    /// commodity)` column must have positive total supply.
    pub fn from_allocation(all: &BilateralTensor) -> Result<TradeShares> {
        let mut t = all.clone();
        for d in 0..all.n_countries {
            for y in 0..all.n_sectors {
                let col = t.column_mut(d, y);
                let mut total = 0.0;
                for (o, v) in col.iter().enumerate() {
                    if *v < 0.0 || !v.is_finite() {
                        return Err(Error::Invalid(format!(
                            "allocation entry (origin {o}, destination {d}, commodity {y}) is {v}"
                        )));
                    }
                    total += *v;
                }
                if total <= 0.0 {
                    return Err(Error::Invalid(format!(
                        "destination {d}, commodity {y} has zero total supply"
                    )));
                }
                for v in col.iter_mut() {
                    *v /= total;
                }
            }
        }
        Ok(TradeShares(t))
    }

    /// Wrap a tensor that is already column-stochastic.
    pub fn from_stochastic(t: BilateralTensor) -> Result<TradeShares> {
        for d in 0..t.n_countries {
            for y in 0..t.n_sectors {
                let sum: f64 = t.column(d, y).iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Invalid(format!(
                        "trade-share column (destination {d}, commodity {y}) sums to {sum}, not 1"
                    )));
                }
                if t.column(d, y).iter().any(|v| *v < 0.0) {
                    return Err(Error::Invalid(format!(
                        "negative trade share in column (destination {d}, commodity {y})"
                    )));
                }
            }
        }
        Ok(TradeShares(t))
    }

    /// Autarkic shares: every destination supplies itself.
    pub fn autarkic(n_countries: usize, n_sectors: usize) -> TradeShares {
        let mut t = BilateralTensor::zeros(n_countries, n_sectors);
        for d in 0..n_countries {
            for y in 0..n_sectors {
                t.set(d, d, y, 1.0);
            }
        }
        TradeShares(t)
    }

    pub fn tensor(&self) -> &BilateralTensor {
        &self.0
    }

    #[inline]
    pub fn get(&self, origin: usize, dest: usize, commodity: usize) -> f64 {
        self.0.get(origin, dest, commodity)
    }

    pub fn n_countries(&self) -> usize {
        self.0.n_countries
    }

    pub fn n_sectors(&self) -> usize {
        self.0.n_sectors
    }

    /// `out = T v`: `out[(o,y)] = sum_d t(o,d,y) v[(d,y)]`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.0.n_sectors;
        out.fill(0.0);
        for d in 0..self.0.n_countries {
            for y in 0..n {
                let s = v[d * n + y];
                if s == 0.0 {
                    continue;
                }
                let col = self.0.column(d, y);
                for (o, t) in col.iter().enumerate() {
                    out[o * n + y] += t * s;
                }
            }
        }
    }

    /// `out = T' v`: `out[(d,y)] = sum_o t(o,d,y) v[(o,y)]`.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        let n = self.0.n_sectors;
        for d in 0..self.0.n_countries {
            for y in 0..n {
                let col = self.0.column(d, y);
                let mut acc = 0.0;
                for (o, t) in col.iter().enumerate() {
                    acc += t * v[o * n + y];
                }
                out[d * n + y] = acc;
            }
        }
    }

    /// Convex blend `self + damping * (target - self)`; preserves column
    /// stochasticity and zero shares common to both.
    pub fn damped_towards(&self, target: &TradeShares, damping: f64) -> TradeShares {
        let mut out = self.0.clone();
        for (o, t) in out.vals.iter_mut().zip(&target.0.vals) {
            *o += damping * (t - *o);
        }
        TradeShares(out)
    }

    /// Max over columns of |column sum - 1|; test/diagnostic helper.
    pub fn stochastic_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for d in 0..self.0.n_countries {
            for y in 0..self.0.n_sectors {
                let sum: f64 = self.0.column(d, y).iter().sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }
}

/// Solve `(I - M) x = b` by fixed-point iteration `x <- M x + b`, where
/// `mul` computes `M v`. Requires spectral radius of `M` below 1, which is
/// checked indirectly through the residual. Never forms an inverse.
pub fn solve_series<F>(mul: F, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = b.to_vec();
    let mut next = vec![0.0; b.len()];
    let mut prev_change = f64::INFINITY;
    let mut growth_streak = 0usize;
    for iter in 0..max_iter {
        mul(&x, &mut next);
        let mut change = 0.0f64;
        for (n, bv) in next.iter_mut().zip(b) {
            *n += bv;
        }
        for (n, o) in next.iter().zip(&x) {
            change = change.max((n - o).abs());
        }
        std::mem::swap(&mut x, &mut next);
        // x_{k+1} - x_k equals the residual b - (I - M) x_k exactly.
        if change <= rel_tol * bnorm {
            return Ok(x);
        }
        if change > prev_change {
            growth_streak += 1;
            if growth_streak >= 20 {
                return Err(Error::LinearSolve {
                    residual: change / bnorm,
                    iterations: iter + 1,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_change = change;
    }
    Err(Error::LinearSolve {
        residual: prev_change / bnorm,
        iterations: max_iter,
    })
}

/// Internal tolerance of the production / price linear solves, relative to
/// the right-hand side. Tight enough that the spec-level residual bound of
/// 1e-10 holds with margin.
pub const LINEAR_SOLVE_TOL: f64 = 1e-13;
pub const LINEAR_SOLVE_MAX_ITER: usize = 500_000;

/// Gross output from final demand: solves `(I - T A) x = T fd`.
pub fn solve_production(a: &BlockDiag, t: &TradeShares, fd: &DemandVector) -> Result<Vec<f64>> {
    let dim = a.dim();
    if t.n_countries() != a.n_countries() || t.n_sectors() != a.n_sectors() || fd.len() != dim {
        return Err(Error::Dimension(format!(
            "production solve: A is {}x{} blocks, T is {}x{}, fd length {}",
            a.n_countries(),
            a.n_sectors(),
            t.n_countries(),
            t.n_sectors(),
            fd.len()
        )));
    }
    let mut b = vec![0.0; dim];
    t.apply(fd.values(), &mut b);
    let mut x = solve_series(
        |v, out| {
            let mut ax = vec![0.0; v.len()];
            a.apply(v, &mut ax);
            t.apply(&ax, out);
        },
        &b,
        LINEAR_SOLVE_TOL,
        LINEAR_SOLVE_MAX_ITER,
    )?;
    for v in x.iter_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVE_CLAMP {
                return Err(Error::Invalid(format!(
                    "production solve produced negative output {v}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(x)
}

/// Bilateral trade flows and per-country import/export totals at a solved
/// state. `T2` is `T` with all domestic blocks zeroed: only cross-border
/// flows count as trade.
#[derive(Debug, Clone)]
pub struct TradeFlows {
    /// Cross-border flow of commodity `y` from origin to destination;
    /// domestic entries are zero.
    pub bilateral: BilateralTensor,
    /// Per-country import totals (demand-side reading of the tensor).
    pub imports_by_country: Vec<f64>,
    /// Per-country export totals (supply-side reading).
    pub exports_by_country: Vec<f64>,
    /// Exports by origin country-sector cell, length `Nn`.
    pub exports_by_cell: Vec<f64>,
    /// Imports by destination country-commodity cell, length `Nn`.
    pub imports_by_cell: Vec<f64>,
}

/// Evaluate `T2 (A x^ + fd)` and aggregate both margins.
pub fn compute_trade_flows(
    t: &TradeShares,
    a: &BlockDiag,
    x: &[f64],
    fd: &DemandVector,
) -> Result<TradeFlows> {
    let nc = a.n_countries();
    let n = a.n_sectors();
    let dim = a.dim();
    if x.len() != dim || fd.len() != dim || t.n_countries() != nc || t.n_sectors() != n {
        return Err(Error::Dimension("trade flows: inconsistent shapes".into()));
    }
    // Absorption of commodity y in destination d: intermediate use plus
    // final demand.
    let mut absorption = vec![0.0; dim];
    a.apply(x, &mut absorption);
    for (w, f) in absorption.iter_mut().zip(fd.values()) {
        *w += f;
    }
    let mut bilateral = BilateralTensor::zeros(nc, n);
    let mut imports_by_country = vec![0.0; nc];
    let mut exports_by_country = vec![0.0; nc];
    let mut exports_by_cell = vec![0.0; dim];
    let mut imports_by_cell = vec![0.0; dim];
    for d in 0..nc {
        for y in 0..n {
            let w = absorption[d * n + y];
            for o in 0..nc {
                if o == d {
                    continue;
                }
                let flow = t.get(o, d, y) * w;
                if flow == 0.0 {
                    continue;
                }
                bilateral.set(o, d, y, flow);
                imports_by_country[d] += flow;
                exports_by_country[o] += flow;
                exports_by_cell[o * n + y] += flow;
                imports_by_cell[d * n + y] += flow;
            }
        }
    }
    Ok(TradeFlows {
        bilateral,
        imports_by_country,
        exports_by_country,
        exports_by_cell,
        imports_by_cell,
    })
}
