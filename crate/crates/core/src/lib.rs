//! Sizing of movable energy resources (MERs) for radial distribution feeders.
//!
//! The pipeline samples wind-driven multi-line outages from a fragility curve,
//! reduces them with k-means, reconfigures the feeder per scenario with a
//! Kruskal spanning forest, enumerates every MER placement for each
//! (total size, count) pair, and picks the optimal count and size from the
//! derivatives of the resulting minimum expected-load-curtailment matrix.

pub mod config;
pub mod curtailment;
pub mod enumeration;
pub mod error;
pub mod fixtures;
pub mod hazard;
pub mod network;
pub mod pipeline;
pub mod reduction;
pub mod sizing;
pub mod union_find;

pub use curtailment::{
    classify_islands, expected_load_curtailment, load_curtailment, IslandKind, IslandReport,
    MerPlacement, ReconfigCache,
};
pub use enumeration::{build_min_elc_matrix, enumerate_mer_grid, min_elc_for_config, ElcMatrix, MerGrid};
pub use error::{Error, Result};
pub use hazard::{generate_scenarios, line_failure_probability, FragilityParams, OutageScenario};
pub use network::{connected_components, kruskal_spanning_forest, Branch, Network, NodeLoad, Reconfiguration};
pub use reduction::{reduce_scenarios, ReducedScenarioSet};
pub use sizing::{gradient_1d, select_optimal, DerivativeTables, SizingResult};
