//! Report emission: per-scenario CSV tables plus a run manifest, and the
//! cross-scenario comparison table.
//!
//! Every table starts with `#`-prefixed header lines recording the model
//! parameters and solver outcome. Absolute values are printed to three
//! decimals (thousands of jobs / monetary units) and percentages to two;
//! percentage columns are computed from the *printed* absolute values so
//! they are always recomputable from the emitted columns. The full
//! country-by-sector delta table keeps full precision since it feeds
//! downstream tooling rather than human readers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::employment::{top_k, EmploymentReport, RankDimension, PARTITIONS};
use crate::equilibrium::DeltaReport;
use crate::error::{Error, Result};
use crate::income::IncomeGroups;
use crate::world::WorldDims;

/// Solver provenance stamped on every table and stored as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: String,
    pub world_hash: String,
    pub sigma: f64,
    pub epsilon: f64,
    pub damping: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub top_k: usize,
    /// Unix seconds; `None` for byte-reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunMeta {
    fn header(&self) -> String {
        let mut h = format!(
            "# scenario: {}\n# sigma: {} epsilon: {} damping: {} tolerance: {:e}\n# iterations: {} converged: {}\n",
            self.scenario,
            self.sigma,
            self.epsilon,
            self.damping,
            self.tolerance,
            self.iterations,
            self.converged
        );
        if let Some(ts) = self.timestamp {
            h.push_str(&format!("# generated: {ts}\n"));
        }
        h
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn fmt_abs(v: f64) -> String {
    format!("{:.3}", round3(v))
}

/// Percentage derived from the printed absolutes, so the emitted columns
/// stay mutually consistent. Empty when the printed baseline is zero.
fn fmt_pct(baseline: f64, delta: f64) -> String {
    let b = round3(baseline);
    if b == 0.0 {
        String::new()
    } else {
        format!("{:.2}", round3(delta) / b * 100.0)
    }
}

fn aggregate_row(name: &str, baseline: f64, delta: f64) -> String {
    format!(
        "{},{},{},{}\n",
        name,
        fmt_abs(baseline),
        fmt_abs(delta),
        fmt_pct(baseline, delta)
    )
}

fn grouped_table(
    meta: &RunMeta,
    value_name: &str,
    names: &[String],
    baseline: &[f64],
    delta: &[f64],
) -> String {
    let mut out = meta.header();
    out.push_str(&format!("group,baseline_{value_name},delta_{value_name},pct\n"));
    for (i, name) in names.iter().enumerate() {
        out.push_str(&aggregate_row(name, baseline[i], delta[i]));
    }
    let tb: f64 = baseline.iter().sum();
    let td: f64 = delta.iter().sum();
    out.push_str(&aggregate_row("Total", tb, td));
    out
}

fn ranked_table(
    meta: &RunMeta,
    report: &EmploymentReport,
    dimension: RankDimension,
    k: usize,
) -> Result<String> {
    let table = top_k(report, dimension, k)?;
    let mut out = meta.header();
    out.push_str("name,baseline_employment,delta_employment,pct\n");
    for row in &table.rows {
        out.push_str(&aggregate_row(&row.name, row.baseline, row.delta));
    }
    out.push_str(&aggregate_row(
        "Subtotal",
        table.subtotal_baseline,
        table.subtotal_delta,
    ));
    out.push_str(&aggregate_row("Total", table.total_baseline, table.total_delta));
    Ok(out)
}

fn distribution_table(meta: &RunMeta, report: &EmploymentReport) -> String {
    let mut out = meta.header();
    out.push_str("partition,category,loss_share_pct\n");
    for (p, (partition, categories)) in PARTITIONS.iter().enumerate() {
        for (c, category) in categories.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.2}\n",
                partition,
                category,
                report.loss_distribution[p][c]
            ));
        }
    }
    out
}

fn cell_delta_table(
    meta: &RunMeta,
    dims: &WorldDims,
    deltas: &DeltaReport,
    employment: &EmploymentReport,
) -> String {
    let mut out = meta.header();
    out.push_str(
        "country,sector,output_baseline,output_delta,fd_baseline,fd_delta,\
         exports_baseline,exports_delta,employment_baseline,employment_delta\n",
    );
    for c in 0..dims.n_countries() {
        for s in 0..dims.n_sectors() {
            let i = c * dims.n_sectors() + s;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                dims.country_codes()[c],
                dims.sector_codes()[s],
                deltas.output.baseline[i],
                deltas.output.delta[i],
                deltas.fd.baseline[i],
                deltas.fd.delta[i],
                deltas.exports_by_cell.baseline[i],
                deltas.exports_by_cell.delta[i],
                employment.cell_baseline[i],
                employment.cell_delta[i],
            ));
        }
    }
    out
}

/// The file names emitted per scenario, in write order.
pub const REPORT_FILES: [&str; 7] = [
    "employment_by_income_group.csv",
    "exports_by_income_group.csv",
    "top_countries.csv",
    "top_sectors.csv",
    "labour_group_distribution.csv",
    "country_sector_delta.csv",
    "manifest.json",
];

/// Write the full table suite for one scenario into `dir`.
pub fn write_reports(
    dir: &Path,
    meta: &RunMeta,
    dims: &WorldDims,
    groups: &IncomeGroups,
    employment: &EmploymentReport,
    deltas: &DeltaReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;

    let emp_names: Vec<String> = employment
        .by_income_group
        .iter()
        .map(|g| g.name.clone())
        .collect();
    let emp_base: Vec<f64> = employment.by_income_group.iter().map(|g| g.baseline).collect();
    let emp_delta: Vec<f64> = employment.by_income_group.iter().map(|g| g.delta).collect();

    let exp_base = groups.aggregate(&deltas.exports_by_country.baseline);
    let exp_delta = groups.aggregate(&deltas.exports_by_country.delta);

    let tables: Vec<(usize, String)> = vec![
        (0, grouped_table(meta, "employment", &emp_names, &emp_base, &emp_delta)),
        (1, grouped_table(meta, "exports", groups.group_names(), &exp_base, &exp_delta)),
        (2, ranked_table(meta, employment, RankDimension::Country, meta.top_k)?),
        (3, ranked_table(meta, employment, RankDimension::Sector, meta.top_k)?),
        (4, distribution_table(meta, employment)),
        (5, cell_delta_table(meta, dims, deltas, employment)),
        (6, serde_json::to_string_pretty(meta).expect("manifest serializes") + "\n"),
    ];

    let mut written = Vec::new();
    for (idx, text) in tables {
        let path = dir.join(REPORT_FILES[idx]);
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

fn read_meta(dir: &Path) -> Result<RunMeta> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("bad manifest in {}: {e}", dir.display())))
}

fn read_income_table(dir: &Path) -> Result<Vec<(String, String, String, String)>> {
    let text = std::fs::read_to_string(dir.join("employment_by_income_group.csv"))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("group,") || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Invalid(format!(
                "malformed income-group row in {}: {line:?}",
                dir.display()
            )));
        }
        rows.push((
            cols[0].to_string(),
            cols[1].to_string(),
            cols[2].to_string(),
            cols[3].to_string(),
        ));
    }
    Ok(rows)
}

/// Merge completed runs into one side-by-side income-group table: a
/// shared baseline column, then delta and percentage columns per
/// scenario. All runs must come from the same world (matching hashes).
pub fn compare_reports(dirs: &[PathBuf]) -> Result<String> {
    if dirs.len() < 2 {
        return Err(Error::Invalid("compare needs at least two report directories".into()));
    }
    let metas: Vec<RunMeta> = dirs.iter().map(|d| read_meta(d)).collect::<Result<_>>()?;
    for m in &metas[1..] {
        if m.world_hash != metas[0].world_hash {
            return Err(Error::Invalid(format!(
                "world hash mismatch: run {:?} used a different world than {:?}",
                m.scenario, metas[0].scenario
            )));
        }
    }
    let tables: Vec<_> = dirs.iter().map(|d| read_income_table(d)).collect::<Result<_>>()?;
    let reference = &tables[0];
    for (t, dir) in tables.iter().zip(dirs) {
        let groups_match = t.len() == reference.len()
            && t.iter().zip(reference).all(|(a, b)| a.0 == b.0 && a.1 == b.1);
        if !groups_match {
            return Err(Error::Invalid(format!(
                "income-group rows in {} do not line up with {}",
                dir.display(),
                dirs[0].display()
            )));
        }
    }

    let mut out = String::from("# side-by-side employment change by income group\n");
    out.push_str("group,baseline_employment");
    for m in &metas {
        out.push_str(&format!(",{0}_delta,{0}_pct", m.scenario));
    }
    out.push('\n');
    for (i, row) in reference.iter().enumerate() {
        out.push_str(&format!("{},{}", row.0, row.1));
        for t in &tables {
            out.push_str(&format!(",{},{}", t[i].2, t[i].3));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_fixture, FixtureSpec};
    use crate::employment::employment_delta;
    use crate::equilibrium::{diff_states, solve_baseline, solve_scenario, ModelParams, SolverConfig};
    use crate::world::BilateralTensor;

    fn run_dir(
        dir: &Path,
        seed: u64,
        scenario: &str,
        tariff: Option<(usize, usize, f64)>,
    ) -> (RunMeta, String) {
        let world = generate_fixture(&FixtureSpec {
            seed,
            n_countries: 3,
            n_sectors: 2,
            sparsity: 0.0,
            trade_openness: 0.5,
        })
        .unwrap();
        let params = ModelParams::defaults(2);
        let cfg = SolverConfig::default();
        let base = solve_baseline(&world).unwrap();
        let mut wedge = BilateralTensor::zeros(3, 2);
        if let Some((o, d, rate)) = tariff {
            for y in 0..2 {
                wedge.set(o, d, y, rate);
            }
        }
        let shocked = solve_scenario(&world, &params, &wedge, &cfg).unwrap();
        let deltas = diff_states(&base, &shocked).unwrap();
        let groups = IncomeGroups::identity(&world.dims);
        let emp =
            employment_delta(&world.satellite, &world.dims, &groups, &base.x, &shocked.x).unwrap();
        let meta = RunMeta {
            scenario: scenario.to_string(),
            world_hash: world.world_hash(),
            sigma: 4.0,
            epsilon: -0.5,
            damping: cfg.damping,
            tolerance: cfg.tolerance,
            iterations: shocked.iterations,
            converged: shocked.converged,
            top_k: 2,
            timestamp: None,
        };
        write_reports(dir, &meta, &world.dims, &groups, &emp, &deltas).unwrap();
        let hash = world.world_hash();
        (meta, hash)
    }

    #[test]
    fn zero_scenario_tables_are_all_zero_deltas() {
        let tmp = tempfile::tempdir().unwrap();
        run_dir(tmp.path(), 7, "null", None);
        let text =
            std::fs::read_to_string(tmp.path().join("employment_by_income_group.csv")).unwrap();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("group,")) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[2], "0.000", "nonzero delta in {line:?}");
        }
    }

    #[test]
    fn percentages_recompute_from_printed_absolutes() {
        let tmp = tempfile::tempdir().unwrap();
        run_dir(tmp.path(), 11, "s", Some((0, 1, 0.30)));
        let text = std::fs::read_to_string(tmp.path().join("top_countries.csv")).unwrap();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("name,")) {
            let cols: Vec<&str> = line.split(',').collect();
            let base: f64 = cols[1].parse().unwrap();
            let delta: f64 = cols[2].parse().unwrap();
            if cols[3].is_empty() {
                assert_eq!(base, 0.0);
                continue;
            }
            let pct: f64 = cols[3].parse().unwrap();
            assert!(
                (delta / base * 100.0 - pct).abs() <= 0.005 + 1e-12,
                "{line:?}"
            );
        }
    }

    #[test]
    fn distribution_sums_to_100_per_partition() {
        let tmp = tempfile::tempdir().unwrap();
        run_dir(tmp.path(), 13, "s", Some((1, 0, 0.4)));
        let text =
            std::fs::read_to_string(tmp.path().join("labour_group_distribution.csv")).unwrap();
        let mut sums = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("partition,")) {
            let cols: Vec<&str> = line.split(',').collect();
            *sums.entry(cols[0].to_string()).or_insert(0.0) += cols[2].parse::<f64>().unwrap();
        }
        assert_eq!(sums.len(), 4);
        for (partition, sum) in sums {
            assert!((sum - 100.0).abs() < 0.011, "{partition}: {sum}");
        }
    }

    #[test]
    fn output_is_deterministic_without_timestamp() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_dir(a.path(), 17, "s", Some((0, 2, 0.25)));
        run_dir(b.path(), 17, "s", Some((0, 2, 0.25)));
        for name in REPORT_FILES {
            let fa = std::fs::read(a.path().join(name)).unwrap();
            let fb = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(fa, fb, "{name} differs between identical runs");
        }
    }

    #[test]
    fn compare_run_with_itself_pairs_identical_columns() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_dir(a.path(), 19, "s1", Some((0, 1, 0.2)));
        run_dir(b.path(), 19, "s1", Some((0, 1, 0.2)));
        let merged =
            compare_reports(&[a.path().to_path_buf(), b.path().to_path_buf()]).unwrap();
        for line in merged.lines().filter(|l| !l.starts_with('#') && !l.starts_with("group,")) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 6);
            assert_eq!(cols[2], cols[4], "{line:?}");
            assert_eq!(cols[3], cols[5], "{line:?}");
        }
    }

    #[test]
    fn compare_refuses_mismatched_worlds() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_dir(a.path(), 19, "s1", Some((0, 1, 0.2)));
        run_dir(b.path(), 23, "s2", Some((0, 1, 0.2))); // different seed -> different world
        let err = compare_reports(&[a.path().to_path_buf(), b.path().to_path_buf()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("hash mismatch"), "{err}");
    }

    #[test]
    fn compare_merges_three_scenarios() {
        let dirs: Vec<PathBuf> = [("s1", 0.1), ("s2", 0.3), ("s3", 0.5)]
            .iter()
            .enumerate()
            .map(|(i, (name, rate))| {
                let dir = tempfile::tempdir().unwrap().keep();
                run_dir(&dir, 31, name, Some((0, (i % 2) + 1, *rate)));
                dir
            })
            .collect();
        let merged = compare_reports(&dirs).unwrap();
        let header = merged.lines().find(|l| l.starts_with("group,")).unwrap();
        assert_eq!(
            header,
            "group,baseline_employment,s1_delta,s1_pct,s2_delta,s2_pct,s3_delta,s3_pct"
        );
        // rows = groups (identity grouping: 3 countries) + Total
        let rows = merged
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("group,"))
            .count();
        assert_eq!(rows, 4);
        for dir in dirs {
            let _ = std::fs::remove_dir_all(dir);
        }
    }
}
