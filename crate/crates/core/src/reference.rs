//! Shipped reference data: the 77-region x 45-sector code lists used by
//! the built-in scenarios, and the ten-group income classification.

use crate::error::Result;
use crate::income::IncomeGroups;
use crate::world::WorldDims;

pub const ICIO_DIMS_CSV: &str = include_str!("../data/icio_dims.csv");
pub const INCOME_GROUPS_CSV: &str = include_str!("../data/income_groups.csv");

/// Country and sector code lists at full published scale (77 x 45).
pub fn icio_dims() -> WorldDims {
    let mut countries = Vec::new();
    let mut sectors = Vec::new();
    for line in ICIO_DIMS_CSV.lines().skip(1) {
        let (kind, code) = line.split_once(',').expect("well-formed dims table");
        match kind {
            "country" => countries.push(code.to_string()),
            "sector" => sectors.push(code.to_string()),
            other => unreachable!("unknown dims kind {other:?}"),
        }
    }
    WorldDims::new(countries, sectors).expect("shipped dims table is valid")
}

/// Income-group assignment for the shipped country list, restricted to
/// whatever subset of it `dims` uses.
pub fn icio_income_groups(dims: &WorldDims) -> Result<IncomeGroups> {
    IncomeGroups::from_csv_str(dims, INCOME_GROUPS_CSV)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_dims_have_published_scale() {
        let dims = icio_dims();
        assert_eq!(dims.n_countries(), 77);
        assert_eq!(dims.n_sectors(), 45);
        assert!(dims.country("USA").is_some());
        assert!(dims.country("ROW").is_some());
        assert!(dims.sector("C24").is_some());
        assert!(dims.sector("T").is_some());
    }

    #[test]
    fn income_groups_cover_every_country() {
        let dims = icio_dims();
        let groups = icio_income_groups(&dims).unwrap();
        assert_eq!(groups.group_names().len(), 10);
        let covered: usize = groups
            .group_names()
            .iter()
            .map(|g| groups.members(g).len())
            .sum();
        assert_eq!(covered, 77);
        assert_eq!(groups.members("China"), vec![dims.country("CHN").unwrap()]);
    }
}
