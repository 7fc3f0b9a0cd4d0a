//! Weight antichains: maximal sets of incomparable words whose weights
//! straddle a geometric threshold.
//!
//! For order r and integer k >= 1, the antichain at threshold eta_r^k
//! collects every word whose weight drops strictly below eta_r^k while its
//! parent's weight is still at or above it. Because each child's weight is
//! its parent's weight times a factor of at most 1, every infinite branch
//! crosses the threshold exactly once, so the antichain's cylinders
//! partition the construction's support and the masses sum to 1. Weights of
//! two members differ by at most a factor of 1/eta_r.
//!
//! All threshold comparisons run in log space with a small absolute
//! tolerance; a log weight within the tolerance of the threshold counts as
//! equal, and equality fails the strict inequality that admits a word. On
//! exactly self-similar specs whole generations therefore sit on the
//! threshold and descend one more level, which is the intended reading.

use crate::cylinder::{Cylinder, NodeGeom};
use crate::error::{Error, Result};
use crate::spec::MoranSpec;
use crate::word::Word;
use crate::{DEFAULT_CARDINALITY_CAP, LOG_WEIGHT_TIE_TOL};
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct Antichain {
    pub k: usize,
    pub r: f64,
    /// One-step worst-case weight shrink factor for this spec and order.
    pub eta_r: f64,
    /// Log of eta_r, the unit the threshold is expressed in.
    pub log_eta: f64,
    /// Member cylinders, sorted by left endpoint.
    pub cylinders: Vec<Cylinder>,
}

impl Antichain {
    /// Cardinality of the antichain.
    pub fn phi(&self) -> usize {
        self.cylinders.len()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.cylinders.iter().map(|c| &c.word)
    }

    /// The degenerate level-0 antichain: the root cylinder alone. Serves as
    /// the sentinel when an index rule matches n below the first real
    /// antichain's cardinality.
    pub fn root(spec: &MoranSpec, r: f64) -> Result<Antichain> {
        let bounds = spec.bounds()?;
        Ok(Antichain {
            k: 0,
            r,
            eta_r: bounds.eta(r),
            log_eta: bounds.log_eta(r),
            cylinders: vec![crate::cylinder::cylinder(spec, &Word::root(), r)?],
        })
    }
}

/// Construct the order-r antichain at threshold eta_r^k with the default
/// cardinality cap.
pub fn antichain(spec: &MoranSpec, k: usize, r: f64) -> Result<Antichain> {
    antichain_with_cap(spec, k, r, DEFAULT_CARDINALITY_CAP)
}

/// As [`antichain`], aborting once more than `cap` members or frontier
/// nodes accumulate.
pub fn antichain_with_cap(spec: &MoranSpec, k: usize, r: f64, cap: usize) -> Result<Antichain> {
    spec.ensure_admissible()?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "order r = {r} must be strictly positive"
        )));
    }
    if k == 0 {
        return Antichain::root(spec, r);
    }
    let bounds = spec.bounds()?;
    let log_eta = bounds.log_eta(r);
    let threshold = k as f64 * log_eta;

    // Breadth-first walk. A node is expanded while its log weight is at or
    // above the threshold (up to the tie tolerance) and emitted the moment
    // it drops strictly below.
    let mut members: Vec<(Word, NodeGeom)> = Vec::new();
    let mut frontier: VecDeque<(Word, NodeGeom)> = VecDeque::new();
    frontier.push_back((Word::root(), NodeGeom::root(spec)));
    while let Some((word, geom)) = frontier.pop_front() {
        let level = spec.level(word.depth() + 1)?;
        for j in 0..level.n {
            let child_geom = geom.child(level, j);
            let child_word = word.child(j as u32 + 1);
            if child_geom.log_weight(r) < threshold - LOG_WEIGHT_TIE_TOL {
                members.push((child_word, child_geom));
            } else {
                frontier.push_back((child_word, child_geom));
            }
            if members.len() + frontier.len() > cap {
                return Err(Error::CardinalityCapExceeded { cap });
            }
        }
    }

    let mut cylinders: Vec<Cylinder> = members
        .into_iter()
        .map(|(word, geom)| geom.to_cylinder(word, r))
        .collect();
    cylinders.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(Antichain {
        k,
        r,
        eta_r: bounds.eta(r),
        log_eta,
        cylinders,
    })
}

/// One row of a cardinality growth table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub k: usize,
    pub phi: usize,
    /// Cardinality ratio from this k to the next.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CensusGrowth {
    pub r: f64,
    pub rows: Vec<GrowthRow>,
    /// Largest observed one-step cardinality ratio.
    pub m0_hat: f64,
}

/// Tabulate antichain cardinalities phi_k for k = 1..=k_max and their
/// one-step growth ratios.
pub fn census_growth(spec: &MoranSpec, r: f64, k_max: usize) -> Result<CensusGrowth> {
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "census growth needs k_max >= 2, got {k_max}"
        )));
    }
    let mut phis = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        phis.push(antichain(spec, k, r)?.phi());
    }
    let mut rows = Vec::with_capacity(k_max - 1);
    let mut m0_hat: f64 = 0.0;
    for k in 1..k_max {
        let ratio = phis[k] as f64 / phis[k - 1] as f64;
        m0_hat = m0_hat.max(ratio);
        rows.push(GrowthRow {
            k,
            phi: phis[k - 1],
            ratio,
        });
    }
    Ok(CensusGrowth { r, rows, m0_hat })
}
