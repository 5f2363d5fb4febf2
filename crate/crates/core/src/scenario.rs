//! Declarative tariff scenario files and their resolution into dense
//! tariff tensors.
//!
//! Scenario files are TOML with `name`, `shocks[]`, and `retaliation[]`
//! entry lists. Each entry scopes an ad-valorem add-on by importer,
//! exporter, and commodity list:
//!
//! ```toml
//! name = "example"
//!
//! [[shocks]]
//! importer = "USA"          # country code, "ALL", or "group:<NAME>"
//! exporter = "ALL"
//! commodities = ["C24"]     # omit for all commodities
//! rate = 0.10
//! mode = "set"              # set | add | relieve
//! ```
//!
//! Precedence: entries apply in list order (shocks first, then
//! retaliation); a later `set` overrides an earlier one on the same cell.
//! An explicit `precedence` integer reorders entries; two `set` entries
//! with the same explicit precedence, overlapping scope, and different
//! rates are rejected as contradictory.
//!
//! `relieve` scales down pre-existing baseline duties (`rate` is the
//! reduction fraction). It requires a baseline-duty tensor; without one
//! the relief resolves to zero with a warning. Final add-ons are clamped
//! so that baseline duty plus add-on never goes below zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::income::IncomeGroups;
use crate::world::{BilateralTensor, WorldDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Set,
    Add,
    Relieve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TariffEntry {
    pub importer: String,
    pub exporter: String,
    /// Sector codes the entry applies to; omitted means all commodities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commodities: Option<Vec<String>>,
    /// Ad-valorem fraction (or reduction fraction for `relieve`), >= 0.
    pub rate: f64,
    #[serde(default)]
    pub mode: Mode,
    /// Explicit ordering key; defaults to list position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precedence: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub shocks: Vec<TariffEntry>,
    #[serde(default)]
    pub retaliation: Vec<TariffEntry>,
    #[serde(default)]
    pub overrides: Overrides,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile> {
        Ok(toml::from_str(text)?)
    }

    pub fn parse_path(path: &Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path)?;
        ScenarioFile::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialization cannot fail")
    }
}

/// A scenario resolved against concrete world dimensions.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub description: String,
    /// Add-on rate `addon(o, d, y)`: importer `d`, origin `o`.
    pub addon: BilateralTensor,
    /// Proportional delivered-price change relative to the baseline:
    /// `(1 + duty + addon) / (1 + duty) - 1`.
    pub wedge: BilateralTensor,
    pub overrides: Overrides,
    pub warnings: Vec<String>,
}

fn resolve_countries(
    selector: &str,
    dims: &WorldDims,
    groups: Option<&IncomeGroups>,
    location: &str,
) -> Result<Vec<usize>> {
    if selector == "ALL" {
        return Ok((0..dims.n_countries()).collect());
    }
    if let Some(group) = selector.strip_prefix("group:") {
        let groups = groups.ok_or_else(|| {
            Error::Scenario(format!(
                "{location}: selector {selector:?} needs an income-group mapping"
            ))
        })?;
        let members = groups.members(group);
        if members.is_empty() {
            return Err(Error::Scenario(format!(
                "{location}: unknown or empty income group {group:?}"
            )));
        }
        return Ok(members);
    }
    dims.country(selector)
        .map(|c| vec![c])
        .ok_or_else(|| Error::Scenario(format!("{location}: unknown country code {selector:?}")))
}

fn resolve_sectors(
    commodities: &Option<Vec<String>>,
    dims: &WorldDims,
    location: &str,
) -> Result<Vec<usize>> {
    match commodities {
        None => Ok((0..dims.n_sectors()).collect()),
        Some(list) => list
            .iter()
            .map(|code| {
                dims.sector(code).ok_or_else(|| {
                    Error::Scenario(format!("{location}: unknown sector code {code:?}"))
                })
            })
            .collect(),
    }
}

struct ExpandedEntry {
    importers: Vec<usize>,
    exporters: Vec<usize>,
    sectors: Vec<usize>,
    rate: f64,
    mode: Mode,
    precedence: i64,
    location: String,
}

fn overlaps(a: &ExpandedEntry, b: &ExpandedEntry) -> bool {
    let hit = |xs: &[usize], ys: &[usize]| xs.iter().any(|x| ys.contains(x));
    hit(&a.importers, &b.importers) && hit(&a.exporters, &b.exporters) && hit(&a.sectors, &b.sectors)
}

/// Resolve a scenario file into dense add-on and wedge tensors.
pub fn resolve(
    file: &ScenarioFile,
    dims: &WorldDims,
    groups: Option<&IncomeGroups>,
    baseline_duties: Option<&BilateralTensor>,
) -> Result<ResolvedScenario> {
    let nc = dims.n_countries();
    let ns = dims.n_sectors();
    if let Some(d) = baseline_duties {
        if d.n_countries() != nc || d.n_sectors() != ns {
            return Err(Error::Dimension("baseline duties do not match world dims".into()));
        }
    }
    let mut warnings = Vec::new();

    let mut expanded = Vec::new();
    let lists = [("shocks", &file.shocks), ("retaliation", &file.retaliation)];
    let mut position = 0i64;
    for (list_name, list) in lists {
        for (i, entry) in list.iter().enumerate() {
            let location = format!("{list_name}[{i}]");
            if !(entry.rate >= 0.0) {
                return Err(Error::Scenario(format!(
                    "{location}: negative rate {}",
                    entry.rate
                )));
            }
            if entry.mode == Mode::Relieve && entry.rate > 1.0 {
                return Err(Error::Scenario(format!(
                    "{location}: relief fraction {} exceeds 1",
                    entry.rate
                )));
            }
            expanded.push(ExpandedEntry {
                importers: resolve_countries(&entry.importer, dims, groups, &location)?,
                exporters: resolve_countries(&entry.exporter, dims, groups, &location)?,
                sectors: resolve_sectors(&entry.commodities, dims, &location)?,
                rate: entry.rate,
                mode: entry.mode,
                precedence: entry.precedence.unwrap_or(position),
                location,
            });
            position += 1;
        }
    }

    // Contradictory `set` entries at the same explicit precedence.
    let mut by_precedence: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, e) in expanded.iter().enumerate() {
        by_precedence.entry(e.precedence).or_default().push(i);
    }
    for bucket in by_precedence.values() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                let (a, b) = (&expanded[i], &expanded[j]);
                if a.mode == Mode::Set
                    && b.mode == Mode::Set
                    && a.rate != b.rate
                    && overlaps(a, b)
                {
                    return Err(Error::Scenario(format!(
                        "contradictory set entries at equal precedence {}: {} (rate {}) vs {} (rate {})",
                        a.precedence, a.location, a.rate, b.location, b.rate
                    )));
                }
            }
        }
    }

    // Stable application order: precedence, then original position.
    let mut order: Vec<usize> = (0..expanded.len()).collect();
    order.sort_by_key(|i| expanded[*i].precedence);

    let duty = |o: usize, d: usize, y: usize| -> f64 {
        baseline_duties.map_or(0.0, |t| t.get(o, d, y))
    };
    let mut relieve_without_duties = false;
    let mut addon = BilateralTensor::zeros(nc, ns);
    for idx in order {
        let e = &expanded[idx];
        for &d in &e.importers {
            for &o in &e.exporters {
                if o == d {
                    continue;
                }
                for &y in &e.sectors {
                    match e.mode {
                        Mode::Set => addon.set(o, d, y, e.rate),
                        Mode::Add => {
                            let v = addon.get(o, d, y) + e.rate;
                            addon.set(o, d, y, v);
                        }
                        Mode::Relieve => {
                            let base = duty(o, d, y);
                            if baseline_duties.is_none() {
                                relieve_without_duties = true;
                            } else {
                                let v = addon.get(o, d, y) - e.rate * base;
                                addon.set(o, d, y, v);
                            }
                        }
                    }
                }
            }
        }
    }
    if relieve_without_duties {
        warnings.push(
            "relieve entries resolve to zero: no baseline-duty file was supplied".to_string(),
        );
    }

    // Clamp so resolved duties stay non-negative, then derive price wedges.
    let mut wedge = BilateralTensor::zeros(nc, ns);
    for d in 0..nc {
        for y in 0..ns {
            for o in 0..nc {
                if o == d {
                    addon.set(o, d, y, 0.0);
                    continue;
                }
                let base = duty(o, d, y);
                let mut v = addon.get(o, d, y);
                if v < -base {
                    v = -base;
                    addon.set(o, d, y, v);
                }
                wedge.set(o, d, y, (1.0 + base + v) / (1.0 + base) - 1.0);
            }
        }
    }

    Ok(ResolvedScenario {
        name: file.name.clone(),
        description: file.description.clone(),
        addon,
        wedge,
        overrides: file.overrides.clone(),
        warnings,
    })
}

/// Load a baseline ad-valorem duty tensor from CSV
/// (`origin,destination,commodity,duty`; omitted cells are zero).
pub fn load_baseline_duties(path: &Path, dims: &WorldDims) -> Result<BilateralTensor> {
    let text = std::fs::read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut duties = BilateralTensor::zeros(dims.n_countries(), dims.n_sectors());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let location = format!("{}:{}", path.display(), i + 2);
        let field = |idx: usize| -> Result<&str> {
            rec.get(idx)
                .map(str::trim)
                .ok_or_else(|| Error::Scenario(format!("{location}: missing column {idx}")))
        };
        let o = dims.country(field(0)?).ok_or_else(|| {
            Error::Scenario(format!("{location}: unknown country code {:?}", &rec[0]))
        })?;
        let d = dims.country(field(1)?).ok_or_else(|| {
            Error::Scenario(format!("{location}: unknown country code {:?}", &rec[1]))
        })?;
        let y = dims.sector(field(2)?).ok_or_else(|| {
            Error::Scenario(format!("{location}: unknown sector code {:?}", &rec[2]))
        })?;
        let v: f64 = field(3)?
            .parse()
            .map_err(|_| Error::Scenario(format!("{location}: bad duty value {:?}", &rec[3])))?;
        if !(v >= 0.0) {
            return Err(Error::Scenario(format!("{location}: negative duty {v}")));
        }
        duties.set(o, d, y, v);
    }
    Ok(duties)
}

/// The three shipped scenario files.
pub fn builtin_scenarios() -> Vec<ScenarioFile> {
    [
        include_str!("../data/scenarios/scenario1.toml"),
        include_str!("../data/scenarios/scenario2.toml"),
        include_str!("../data/scenarios/scenario3.toml"),
    ]
    .iter()
    .map(|text| ScenarioFile::parse(text).expect("shipped scenario files parse"))
    .collect()
}

pub fn builtin_scenario(name: &str) -> Option<ScenarioFile> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}
