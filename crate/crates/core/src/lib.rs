//! Capacity-constrained treatment allocation for dynamic populations.
//!
//! The crate solves a steady-state average-reward dual by row generation to
//! obtain bias weights and a capacity price, turns those into an index
//! policy over covariate atoms, and evaluates policies head to head in a
//! paired cohort simulator.

pub mod adp;
pub mod dynamics;
pub mod lp;
pub mod measures;
pub mod model;
pub mod policies;
pub mod sim;
pub mod stats;

pub use measures::{AtomicMeasure, CovariateVector, PopulationState};
pub use model::ModelSpec;
