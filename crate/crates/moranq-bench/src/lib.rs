//! Benchmark-only crate: shared fixtures for the pipeline benchmarks.
//!
//! Nothing here is part of the public API; the crate exists so criterion
//! harnesses have a stable place to live without bloating the core crate's
//! dev-dependencies.

use moranq_core::{discretize, AtomMeasure, MoranSpec};

/// The homogeneous middle-thirds construction used by most benchmarks.
pub fn cantor_spec() -> MoranSpec {
    moranq_core::presets::cantor()
}

/// The inhomogeneous two-level construction: alternating branching 2 and 3.
pub fn alternating_spec() -> MoranSpec {
    moranq_core::presets::alternating_two_three()
}

/// A depth-m middle-thirds discretization, ready to solve.
pub fn cantor_measure(depth: usize) -> AtomMeasure {
    discretize(&cantor_spec(), depth).expect("preset discretizes")
}
