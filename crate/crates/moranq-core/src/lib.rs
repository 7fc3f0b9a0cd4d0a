//! Moran measures on the real line, their finite discretizations, and
//! provably optimal scalar quantizers.
//!
//! The pipeline has four stages:
//!
//! - [`spec`]: a level-by-level description of a Moran construction
//!   (subdivision ratios, branch probabilities, gap layout), loaded from JSON
//!   and validated.
//! - [`measure`]: finite atom measures obtained by truncating the
//!   construction at a chosen depth, with an explicit transport-distance
//!   bound (`w_inf_bound`) that quantifies the truncation error.
//! - [`solver`]: exact n-point quantizers of order r for an atom measure via
//!   dynamic programming over contiguous cells, plus a Lloyd refiner and an
//!   exhaustive oracle for cross-checking.
//! - [`analysis`]: per-cell error reports, antichain/cell incidence counts,
//!   codepoint censuses over cylinder antichains, error sweeps over a range
//!   of n, and quantization-dimension estimates.
//!
//! Cylinder machinery (words, intervals, weight antichains) lives in
//! [`word`], [`cylinder`], and [`antichain`].

pub mod analysis;
pub mod antichain;
pub mod cylinder;
mod dd;
mod error;
pub mod io;
pub mod measure;
pub mod presets;
pub mod spec;
pub mod solver;
pub mod word;

pub use analysis::{
    census, cell_report, choose_k, dimension_estimate, sweep, CellReport, CellRow, CensusReport,
    CensusRow, DimensionEstimate, KRule, SweepRow,
};
pub use antichain::{antichain, antichain_with_cap, census_growth, Antichain, CensusGrowth};
pub use cylinder::{cylinder, Cylinder};
pub use error::{Error, Result};
pub use measure::{
    ball_mass_profile, conditional_rescaled, depth_adequacy, discretize, discretize_with_cap,
    AtomMeasure, BallMassProfile,
};
pub use spec::{DerivedBounds, Layout, Level, MoranSpec, ValidationReport};
pub use solver::{
    cell_cost, dp_optimal, dp_solve, lloyd, oracle_optimal, similarity_transport, CellCostTable,
    DpSolution, Method, Quantizer,
};
pub use word::Word;

/// Default cap on antichain cardinality before construction aborts.
pub const DEFAULT_CARDINALITY_CAP: usize = 10_000_000;

/// Default cap on atom count for discretization.
pub const DEFAULT_ATOM_CAP: usize = 20_000_000;

/// Default safety factor for depth adequacy: the discretization's transport
/// bound must be at most this fraction of the target quantization error.
pub const DEFAULT_SAFETY: f64 = 0.01;

/// Absolute tolerance on log-weight comparisons against antichain
/// thresholds. Within this band the comparison counts as equality, and
/// equality fails the strict inequality that admits a word into the
/// antichain.
pub const LOG_WEIGHT_TIE_TOL: f64 = 1e-12;
