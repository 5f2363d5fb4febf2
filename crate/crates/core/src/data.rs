//! World dataset ingestion, validation, and synthetic fixture generation.
//!
//! The canonical on-disk form is a directory of UTF-8 CSV files with header
//! rows and dot decimals:
//!
//! - `dims.csv`        kind,code              (countries then sectors, in order)
//! - `z.csv`           country,input_sector,using_sector,value   (long form,
//!                     block-diagonal by construction; omitted cells are 0)
//! - `allocation.csv`  origin,destination,commodity,value        (total
//!                     bilateral supply flows, the ALL matrix; omitted 0)
//! - `final_demand.csv` origin,destination,commodity,value       (origin-
//!                     resolved final demand; omitted cells are 0)
//! - `totals.csv`      country,sector,gross_output,value_added   (all cells)
//! - `satellite.csv`   country,sector,coefficient,formal,informal,skilled,
//!                     unskilled,adult,youth,male,female          (all cells)
//!
//! Converting an OECD ICIO distribution into this layout means: aggregate
//! the final-demand components per Eq-of-use into one column, split each
//! country's intermediate use block into `z.csv`, and sum the origin
//! dimension of intermediate plus final use into `allocation.csv`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::employment::{EmploymentSatellite, SHARE_COLUMNS};
use crate::error::{Error, Result};
use crate::world::{
    compute_trade_flows, solve_production, BilateralTensor, BlockDiag, DemandVector, TradeShares,
    WorldDims,
};

/// Relative tolerance of the accounting balances; real-world tables carry
/// rounding residue.
pub const BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WorldDataset {
    pub dims: WorldDims,
    pub z: BlockDiag,
    pub a: BlockDiag,
    pub allocation: BilateralTensor,
    pub trade_shares: TradeShares,
    /// Origin-resolved final demand flows.
    pub fd_alloc: BilateralTensor,
    /// Final demand by destination commodity (origin-aggregated).
    pub fd: DemandVector,
    pub gross_output: Vec<f64>,
    pub value_added: Vec<f64>,
    pub satellite: EmploymentSatellite,
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= BALANCE_TOL * a.abs().max(b.abs()).max(1e-9)
}

impl WorldDataset {
    /// Assemble and validate a dataset from raw tables. Returns a
    /// structured error listing every violated balance with coordinates.
    pub fn from_parts(
        dims: WorldDims,
        z: BlockDiag,
        allocation: BilateralTensor,
        fd_alloc: BilateralTensor,
        gross_output: Vec<f64>,
        value_added: Vec<f64>,
        satellite: EmploymentSatellite,
    ) -> Result<Self> {
        let nc = dims.n_countries();
        let ns = dims.n_sectors();
        let dim = dims.dim();
        if z.n_countries() != nc
            || z.n_sectors() != ns
            || allocation.n_countries() != nc
            || allocation.n_sectors() != ns
            || fd_alloc.n_countries() != nc
            || fd_alloc.n_sectors() != ns
            || gross_output.len() != dim
            || value_added.len() != dim
            || satellite.dim() != dim
        {
            return Err(Error::Dimension("world dataset tables disagree on shape".into()));
        }

        let cell = |i: usize| {
            format!(
                "({}, {})",
                dims.country_codes()[i / ns],
                dims.sector_codes()[i % ns]
            )
        };
        let mut violations = Vec::new();

        for (i, v) in gross_output.iter().enumerate() {
            if *v < 0.0 || !v.is_finite() {
                violations.push(format!("gross output at {} is {v}", cell(i)));
            }
        }
        for (i, v) in value_added.iter().enumerate() {
            if *v < 0.0 || !v.is_finite() {
                violations.push(format!("value added at {} is {v}", cell(i)));
            }
        }
        for d in 0..nc {
            for y in 0..ns {
                for o in 0..nc {
                    let v = allocation.get(o, d, y);
                    if v < 0.0 || !v.is_finite() {
                        violations.push(format!(
                            "allocation flow {} -> {} of {} is {v}",
                            dims.country_codes()[o],
                            dims.country_codes()[d],
                            dims.sector_codes()[y]
                        ));
                    }
                    let f = fd_alloc.get(o, d, y);
                    if f < 0.0 || !f.is_finite() {
                        violations.push(format!(
                            "final-demand flow {} -> {} of {} is {f}",
                            dims.country_codes()[o],
                            dims.country_codes()[d],
                            dims.sector_codes()[y]
                        ));
                    }
                }
            }
        }

        // Final demand by destination commodity.
        let mut fd_vals = vec![0.0; dim];
        for d in 0..nc {
            for y in 0..ns {
                let mut acc = 0.0;
                for o in 0..nc {
                    acc += fd_alloc.get(o, d, y);
                }
                fd_vals[d * ns + y] = acc;
            }
        }

        // Supply balance: everything produced is delivered somewhere.
        for o in 0..nc {
            for y in 0..ns {
                let mut supplied = 0.0;
                for d in 0..nc {
                    supplied += allocation.get(o, d, y);
                }
                let x = gross_output[o * ns + y];
                if !rel_close(x, supplied) {
                    violations.push(format!(
                        "supply balance at {}: gross output {x} vs delivered {supplied}",
                        cell(o * ns + y)
                    ));
                }
            }
        }

        // Absorption balance: deliveries into (d, y) cover intermediate use
        // plus final demand there.
        for d in 0..nc {
            for y in 0..ns {
                let mut received = 0.0;
                for o in 0..nc {
                    received += allocation.get(o, d, y);
                }
                let mut used = fd_vals[d * ns + y];
                for j in 0..ns {
                    used += z.get(d, y, j);
                }
                if !rel_close(received, used) {
                    violations.push(format!(
                        "absorption balance at {}: received {received} vs used {used} (Z row {} of country {})",
                        cell(d * ns + y),
                        dims.sector_codes()[y],
                        dims.country_codes()[d]
                    ));
                }
            }
        }

        // Column balance: inputs plus value added exhaust gross output.
        for d in 0..nc {
            for j in 0..ns {
                let mut inputs = value_added[d * ns + j];
                for y in 0..ns {
                    inputs += z.get(d, y, j);
                }
                let x = gross_output[d * ns + j];
                if !rel_close(x, inputs) {
                    violations.push(format!(
                        "column balance at {}: gross output {x} vs inputs+va {inputs}",
                        cell(d * ns + j)
                    ));
                }
            }
        }

        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        let a = BlockDiag::coefficients(&z, &gross_output)?;
        for (i, s) in a.column_sums().iter().enumerate() {
            if *s >= 1.0 {
                violations.push(format!(
                    "technical-coefficient column at {} sums to {s} (must be < 1)",
                    cell(i)
                ));
            }
        }
        let trade_shares = match TradeShares::from_allocation(&allocation) {
            Ok(t) => Some(t),
            Err(e) => {
                violations.push(e.to_string());
                None
            }
        };
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        Ok(WorldDataset {
            dims,
            z,
            a,
            allocation,
            trade_shares: trade_shares.unwrap(),
            fd_alloc,
            fd: DemandVector::new(fd_vals)?,
            gross_output,
            value_added,
            satellite,
        })
    }

    /// Content hash over dimensions and all numeric tables; used to refuse
    /// cross-run comparisons on different worlds.
    pub fn world_hash(&self) -> String {
        let mut h = Sha256::new();
        for c in self.dims.country_codes() {
            h.update(c.as_bytes());
            h.update([0u8]);
        }
        for s in self.dims.sector_codes() {
            h.update(s.as_bytes());
            h.update([0u8]);
        }
        let mut feed = |vals: &[f64]| {
            for v in vals {
                h.update(v.to_bits().to_le_bytes());
            }
        };
        let nc = self.dims.n_countries();
        let ns = self.dims.n_sectors();
        let mut zvals = Vec::with_capacity(nc * ns * ns);
        for c in 0..nc {
            for y in 0..ns {
                for j in 0..ns {
                    zvals.push(self.z.get(c, y, j));
                }
            }
        }
        feed(&zvals);
        feed(self.allocation.values());
        feed(self.fd_alloc.values());
        feed(&self.gross_output);
        feed(&self.value_added);
        feed(self.satellite.coefficients());
        feed(self.satellite.shares_raw());
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Total baseline employment in thousands.
    pub fn total_employment(&self) -> f64 {
        self.satellite
            .coefficients()
            .iter()
            .zip(&self.gross_output)
            .map(|(c, x)| c * x)
            .sum()
    }
}

/// Parameters of the synthetic fixture generator.
#[derive(Debug, Clone, Copy)]
pub struct FixtureSpec {
    pub seed: u64,
    pub n_countries: usize,
    pub n_sectors: usize,
    /// Probability that an intermediate coefficient is zero, in [0, 1).
    pub sparsity: f64,
    /// Relative weight of foreign supply, in [0, 1]; 0 is autarky.
    pub trade_openness: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 0,
            n_countries: 3,
            n_sectors: 2,
            sparsity: 0.2,
            trade_openness: 0.5,
        }
    }
}

/// Deterministic, balanced-by-construction synthetic world. Demand-driven:
/// draw coefficients and shares, draw final demand, solve for output, then
/// back out the flow tables so every balance holds exactly.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<WorldDataset> {
    let FixtureSpec {
        seed,
        n_countries: nc,
        n_sectors: ns,
        sparsity,
        trade_openness,
    } = *spec;
    if nc < 1 || ns < 1 {
        return Err(Error::Invalid("fixture needs at least 1 country and 1 sector".into()));
    }
    if !(0.0..1.0).contains(&sparsity) || !(0.0..=1.0).contains(&trade_openness) {
        return Err(Error::Invalid(
            "fixture: sparsity must be in [0,1) and trade_openness in [0,1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = WorldDims::synthetic(nc, ns)?;
    let dim = nc * ns;

    // Technical coefficients with column sums well below 1.
    let mut a = BlockDiag::zeros(nc, ns);
    for c in 0..nc {
        for col in 0..ns {
            let mut raw = vec![0.0; ns];
            let mut total = 0.0;
            for v in raw.iter_mut() {
                if rng.gen::<f64>() >= sparsity {
                    *v = rng.gen_range(0.05..1.0);
                    total += *v;
                }
            }
            if total > 0.0 {
                let target = rng.gen_range(0.1..0.65);
                for (row, v) in raw.iter().enumerate() {
                    a.set(c, row, col, v / total * target);
                }
            }
        }
    }

    // Trade shares: home supply plus openness-weighted foreign supply.
    let mut shares = BilateralTensor::zeros(nc, ns);
    for d in 0..nc {
        for y in 0..ns {
            let mut weights = vec![0.0; nc];
            weights[d] = 1.0;
            if trade_openness > 0.0 {
                for (o, w) in weights.iter_mut().enumerate() {
                    if o != d {
                        *w = trade_openness * rng.gen_range(0.05..1.0);
                    }
                }
            }
            let total: f64 = weights.iter().sum();
            for (o, w) in weights.iter().enumerate() {
                shares.set(o, d, y, w / total);
            }
        }
    }
    let t = TradeShares::from_stochastic(shares)?;

    let fd_vals: Vec<f64> = (0..dim).map(|_| rng.gen_range(1.0..10.0)).collect();
    let fd = DemandVector::new(fd_vals)?;

    let x = solve_production(&a, &t, &fd)?;

    // Back out the accounting tables implied by (A, T, fd, x).
    let mut z = BlockDiag::zeros(nc, ns);
    for c in 0..nc {
        for row in 0..ns {
            for col in 0..ns {
                z.set(c, row, col, a.get(c, row, col) * x[c * ns + col]);
            }
        }
    }
    let mut absorption = vec![0.0; dim];
    a.apply(&x, &mut absorption);
    for (w, f) in absorption.iter_mut().zip(fd.values()) {
        *w += f;
    }
    let mut allocation = BilateralTensor::zeros(nc, ns);
    let mut fd_alloc = BilateralTensor::zeros(nc, ns);
    for d in 0..nc {
        for y in 0..ns {
            for o in 0..nc {
                let share = t.get(o, d, y);
                allocation.set(o, d, y, share * absorption[d * ns + y]);
                fd_alloc.set(o, d, y, share * fd.values()[d * ns + y]);
            }
        }
    }
    let mut value_added = x.clone();
    for (i, s) in z.column_sums().iter().enumerate() {
        value_added[i] -= s;
    }

    let coefficients: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.1..5.0)).collect();
    let mut share_vals = Vec::with_capacity(dim * SHARE_COLUMNS);
    for _ in 0..dim {
        for _ in 0..4 {
            let p = rng.gen_range(0.05..0.95);
            share_vals.push(p);
            share_vals.push(1.0 - p);
        }
    }
    let satellite = EmploymentSatellite::new(nc, ns, coefficients, share_vals)?;

    WorldDataset::from_parts(dims, z, allocation, fd_alloc, x, value_added, satellite)
}

// ---------------------------------------------------------------------------
// CSV reading / writing
// ---------------------------------------------------------------------------

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?)
}

fn parse_value(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| {
        Error::Invalid(format!(
            "{}:{line}: cannot parse {s:?} as a number",
            path.display()
        ))
    })
}

fn lookup(
    dims: &WorldDims,
    code: &str,
    kind: &str,
    path: &Path,
    line: usize,
) -> Result<usize> {
    let idx = match kind {
        "country" => dims.country(code.trim()),
        _ => dims.sector(code.trim()),
    };
    idx.ok_or_else(|| {
        Error::Invalid(format!(
            "{}:{line}: unknown {kind} code {code:?}",
            path.display()
        ))
    })
}

/// Load and validate a world dataset from its canonical CSV directory.
pub fn load_world(dir: &Path) -> Result<WorldDataset> {
    // dims.csv
    let dims_path = dir.join("dims.csv");
    let mut countries = Vec::new();
    let mut sectors = Vec::new();
    for (i, rec) in reader(&dims_path)?.records().enumerate() {
        let rec = rec?;
        match rec.get(0).map(str::trim) {
            Some("country") => countries.push(rec[1].trim().to_string()),
            Some("sector") => sectors.push(rec[1].trim().to_string()),
            other => {
                return Err(Error::Invalid(format!(
                    "{}:{}: expected kind country|sector, got {other:?}",
                    dims_path.display(),
                    i + 2
                )))
            }
        }
    }
    let dims = WorldDims::new(countries, sectors)?;
    let nc = dims.n_countries();
    let ns = dims.n_sectors();
    let dim = dims.dim();

    // z.csv
    let z_path = dir.join("z.csv");
    let mut z = BlockDiag::zeros(nc, ns);
    for (i, rec) in reader(&z_path)?.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let c = lookup(&dims, &rec[0], "country", &z_path, line)?;
        let row = lookup(&dims, &rec[1], "sector", &z_path, line)?;
        let col = lookup(&dims, &rec[2], "sector", &z_path, line)?;
        z.set(c, row, col, parse_value(&rec[3], &z_path, line)?);
    }

    // allocation.csv / final_demand.csv share layout
    let load_tensor = |name: &str| -> Result<BilateralTensor> {
        let path = dir.join(name);
        let mut t = BilateralTensor::zeros(nc, ns);
        for (i, rec) in reader(&path)?.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let o = lookup(&dims, &rec[0], "country", &path, line)?;
            let d = lookup(&dims, &rec[1], "country", &path, line)?;
            let y = lookup(&dims, &rec[2], "sector", &path, line)?;
            t.set(o, d, y, parse_value(&rec[3], &path, line)?);
        }
        Ok(t)
    };
    let allocation = load_tensor("allocation.csv")?;
    let fd_alloc = load_tensor("final_demand.csv")?;

    // totals.csv
    let totals_path = dir.join("totals.csv");
    let mut gross_output = vec![f64::NAN; dim];
    let mut value_added = vec![f64::NAN; dim];
    for (i, rec) in reader(&totals_path)?.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let c = lookup(&dims, &rec[0], "country", &totals_path, line)?;
        let s = lookup(&dims, &rec[1], "sector", &totals_path, line)?;
        gross_output[c * ns + s] = parse_value(&rec[2], &totals_path, line)?;
        value_added[c * ns + s] = parse_value(&rec[3], &totals_path, line)?;
    }

    // satellite.csv
    let sat_path = dir.join("satellite.csv");
    let mut coefficients = vec![f64::NAN; dim];
    let mut shares = vec![f64::NAN; dim * SHARE_COLUMNS];
    for (i, rec) in reader(&sat_path)?.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let c = lookup(&dims, &rec[0], "country", &sat_path, line)?;
        let s = lookup(&dims, &rec[1], "sector", &sat_path, line)?;
        let cell = c * ns + s;
        coefficients[cell] = parse_value(&rec[2], &sat_path, line)?;
        for k in 0..SHARE_COLUMNS {
            shares[cell * SHARE_COLUMNS + k] = parse_value(&rec[3 + k], &sat_path, line)?;
        }
    }

    let mut missing = Vec::new();
    for i in 0..dim {
        if gross_output[i].is_nan() || value_added[i].is_nan() {
            missing.push(format!(
                "totals.csv is missing cell ({}, {})",
                dims.country_codes()[i / ns],
                dims.sector_codes()[i % ns]
            ));
        }
        if coefficients[i].is_nan() {
            missing.push(format!(
                "satellite.csv is missing cell ({}, {})",
                dims.country_codes()[i / ns],
                dims.sector_codes()[i % ns]
            ));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }

    let satellite = EmploymentSatellite::new(nc, ns, coefficients, shares)?;
    WorldDataset::from_parts(dims, z, allocation, fd_alloc, gross_output, value_added, satellite)
}

/// Write a dataset into the canonical CSV directory layout. Values use
/// shortest round-trip formatting, so write/load is lossless.
pub fn write_world(world: &WorldDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let dims = &world.dims;
    let nc = dims.n_countries();
    let ns = dims.n_sectors();

    let mut dims_out = String::from("kind,code\n");
    for c in dims.country_codes() {
        dims_out.push_str(&format!("country,{c}\n"));
    }
    for s in dims.sector_codes() {
        dims_out.push_str(&format!("sector,{s}\n"));
    }
    std::fs::write(dir.join("dims.csv"), dims_out)?;

    let mut z_out = String::from("country,input_sector,using_sector,value\n");
    for c in 0..nc {
        for row in 0..ns {
            for col in 0..ns {
                let v = world.z.get(c, row, col);
                if v != 0.0 {
                    z_out.push_str(&format!(
                        "{},{},{},{}\n",
                        dims.country_codes()[c],
                        dims.sector_codes()[row],
                        dims.sector_codes()[col],
                        v
                    ));
                }
            }
        }
    }
    std::fs::write(dir.join("z.csv"), z_out)?;

    let write_tensor = |name: &str, t: &BilateralTensor| -> Result<()> {
        let mut out = String::from("origin,destination,commodity,value\n");
        for o in 0..nc {
            for d in 0..nc {
                for y in 0..ns {
                    let v = t.get(o, d, y);
                    if v != 0.0 {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            dims.country_codes()[o],
                            dims.country_codes()[d],
                            dims.sector_codes()[y],
                            v
                        ));
                    }
                }
            }
        }
        std::fs::write(dir.join(name), out)?;
        Ok(())
    };
    write_tensor("allocation.csv", &world.allocation)?;
    write_tensor("final_demand.csv", &world.fd_alloc)?;

    let mut totals = String::from("country,sector,gross_output,value_added\n");
    for c in 0..nc {
        for s in 0..ns {
            totals.push_str(&format!(
                "{},{},{},{}\n",
                dims.country_codes()[c],
                dims.sector_codes()[s],
                world.gross_output[c * ns + s],
                world.value_added[c * ns + s]
            ));
        }
    }
    std::fs::write(dir.join("totals.csv"), totals)?;

    let mut sat = String::from(
        "country,sector,coefficient,formal,informal,skilled,unskilled,adult,youth,male,female\n",
    );
    for c in 0..nc {
        for s in 0..ns {
            let cell = c * ns + s;
            sat.push_str(&format!(
                "{},{}",
                dims.country_codes()[c],
                dims.sector_codes()[s]
            ));
            sat.push_str(&format!(",{}", world.satellite.coefficients()[cell]));
            for k in 0..SHARE_COLUMNS {
                sat.push_str(&format!(",{}", world.satellite.share(cell, k)));
            }
            sat.push('\n');
        }
    }
    std::fs::write(dir.join("satellite.csv"), sat)?;
    Ok(())
}

/// Sanity check used by `solve_baseline`: bilateral closure at the
/// recorded baseline.
pub fn baseline_trade_closure(world: &WorldDataset) -> Result<f64> {
    let flows = compute_trade_flows(
        &world.trade_shares,
        &world.a,
        &world.gross_output,
        &world.fd,
    )?;
    let imports: f64 = flows.imports_by_country.iter().sum();
    let exports: f64 = flows.exports_by_country.iter().sum();
    Ok((imports - exports).abs() / imports.max(exports).max(1e-300))
}
