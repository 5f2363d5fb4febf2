//! Multiregional input-output tariff simulation engine.
//!
//! The crate models how bilateral tariff shocks propagate through global
//! production networks: import sourcing shares respond to relative
//! delivered prices, cost increases pass through the intermediate-input
//! structure, final demand contracts with consumer prices, and an
//! employment satellite translates output changes into jobs by country,
//! sector, labour group, and income group.
//!
//! Start with [`data::WorldDataset`] (load from CSV or generate a
//! synthetic fixture), resolve a [`scenario::ScenarioFile`] against its
//! dimensions, and hand both to [`equilibrium::solve_scenario`].

pub mod armington;
pub mod data;
pub mod employment;
pub mod equilibrium;
pub mod error;
pub mod income;
pub mod price;
pub mod reference;
pub mod report;
pub mod scenario;
pub mod world;

pub use error::{Error, Result};
