//! Country-to-income-group mapping used by the report aggregations.
//!
//! The grouping is configuration, not code: it is loaded from a two-column
//! CSV (`country,group`). Absent a mapping, every country is its own group.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::world::WorldDims;

#[derive(Debug, Clone)]
pub struct IncomeGroups {
    group_names: Vec<String>,
    /// Group index per country, aligned with `WorldDims::country_codes`.
    assignment: Vec<usize>,
}

impl IncomeGroups {
    pub fn from_pairs(dims: &WorldDims, pairs: &[(String, String)]) -> Result<Self> {
        let mut by_country: HashMap<&str, &str> = HashMap::new();
        for (country, group) in pairs {
            by_country.insert(country.as_str(), group.as_str());
        }
        let mut group_names: Vec<String> = Vec::new();
        let mut group_index: HashMap<String, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(dims.n_countries());
        for code in dims.country_codes() {
            let group = by_country.get(code.as_str()).copied().ok_or_else(|| {
                Error::Invalid(format!("income-group mapping is missing country {code:?}"))
            })?;
            let gi = *group_index.entry(group.to_string()).or_insert_with(|| {
                group_names.push(group.to_string());
                group_names.len() - 1
            });
            assignment.push(gi);
        }
        Ok(IncomeGroups {
            group_names,
            assignment,
        })
    }

    pub fn from_csv_path(dims: &WorldDims, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(dims, &text)
    }

    pub fn from_csv_str(dims: &WorldDims, text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Invalid("income-group rows need country,group".into()));
            }
            pairs.push((rec[0].trim().to_string(), rec[1].trim().to_string()));
        }
        Self::from_pairs(dims, &pairs)
    }

    /// Fallback grouping: each country is its own group.
    pub fn identity(dims: &WorldDims) -> Self {
        IncomeGroups {
            group_names: dims.country_codes().to_vec(),
            assignment: (0..dims.n_countries()).collect(),
        }
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn group_of(&self, country: usize) -> usize {
        self.assignment[country]
    }

    /// All country indices in a named group.
    pub fn members(&self, group: &str) -> Vec<usize> {
        match self.group_names.iter().position(|g| g == group) {
            Some(gi) => self
                .assignment
                .iter()
                .enumerate()
                .filter(|(_, g)| **g == gi)
                .map(|(c, _)| c)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Sum a per-country vector into per-group totals.
    pub fn aggregate(&self, per_country: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.group_names.len()];
        for (c, v) in per_country.iter().enumerate() {
            out[self.assignment[c]] += v;
        }
        out
    }
}
