//! Finite atom measures approximating a Moran measure at a chosen depth.
//!
//! Truncating the construction at depth m and collapsing each depth-m
//! cylinder onto its midpoint yields an atom measure whose L-infinity
//! transport distance from the true measure is at most half the longest
//! depth-m cylinder. That bound is stored as `w_inf_bound` and drives the
//! depth-adequacy gate: optimal quantization errors computed on the atoms
//! are certified for the underlying measure only when the transport bound
//! is small against the error itself.
//!
//! Prefix sums of weight, weight * position, and weight * position^2 are
//! carried in compensated (double-double) form so the solver can evaluate
//! cell costs in O(1) without losing the tiny differences to cancellation.

use crate::cylinder::{walk, NodeGeom};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::spec::MoranSpec;
use crate::word::Word;
use crate::{DEFAULT_ATOM_CAP, DEFAULT_SAFETY};

#[derive(Debug, Clone)]
pub struct AtomMeasure {
    positions: Vec<f64>,
    weights: Vec<f64>,
    /// Construction depth the atoms came from; 0 for measures built
    /// directly from points.
    depth: usize,
    /// Upper bound on the L-infinity transport distance to the measure the
    /// atoms approximate: half the longest source cylinder, 0 for exact
    /// point measures.
    w_inf_bound: f64,
    cw: Vec<Dd>,
    cwx: Vec<Dd>,
    cwx2: Vec<Dd>,
}

impl AtomMeasure {
    /// Build a measure from raw weighted points. Points are sorted,
    /// exact-duplicate positions are merged additively, and weights are
    /// normalized to sum 1. The transport bound is 0: the measure is taken
    /// as exact.
    pub fn from_points(positions: Vec<f64>, weights: Vec<f64>) -> Result<AtomMeasure> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions with {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidArgument("no atoms".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite position".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and strictly positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let mut atoms: Vec<(f64, f64)> = positions
            .into_iter()
            .zip(weights.into_iter().map(|w| w / total))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::assemble(atoms, 0, 0.0)
    }

    /// Shared tail of all constructors: atoms must arrive sorted.
    fn assemble(atoms: Vec<(f64, f64)>, depth: usize, w_inf_bound: f64) -> Result<AtomMeasure> {
        let mut positions = Vec::with_capacity(atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            // Merge only exact duplicates; distinct nearby atoms stay
            // distinct.
            if positions.last() == Some(&x) {
                *weights.last_mut().unwrap() += w;
            } else {
                positions.push(x);
                weights.push(w);
            }
        }
        let n = positions.len();
        let mut cw = Vec::with_capacity(n + 1);
        let mut cwx = Vec::with_capacity(n + 1);
        let mut cwx2 = Vec::with_capacity(n + 1);
        cw.push(Dd::ZERO);
        cwx.push(Dd::ZERO);
        cwx2.push(Dd::ZERO);
        for i in 0..n {
            let w = weights[i];
            let x = positions[i];
            let wx = Dd::prod(w, x);
            let wx2 = wx.mul_f64(x);
            cw.push(cw[i].add(Dd::from_f64(w)));
            cwx.push(cwx[i].add(wx));
            cwx2.push(cwx2[i].add(wx2));
        }
        Ok(AtomMeasure {
            positions,
            weights,
            depth,
            w_inf_bound,
            cw,
            cwx,
            cwx2,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn w_inf_bound(&self) -> f64 {
        self.w_inf_bound
    }

    /// Smallest and largest atom positions.
    pub fn support(&self) -> (f64, f64) {
        (self.positions[0], self.positions[self.len() - 1])
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// Total weight of atoms i..=j.
    pub(crate) fn range_mass(&self, i: usize, j: usize) -> Dd {
        self.cw[j + 1].sub(self.cw[i])
    }

    pub(crate) fn range_moment1(&self, i: usize, j: usize) -> Dd {
        self.cwx[j + 1].sub(self.cwx[i])
    }

    pub(crate) fn range_moment2(&self, i: usize, j: usize) -> Dd {
        self.cwx2[j + 1].sub(self.cwx2[i])
    }

    /// Smallest index mid in i..=j with weight(i..=mid) >= half of
    /// weight(i..=j): the lower weighted median position index.
    pub(crate) fn lower_median_index(&self, i: usize, j: usize) -> usize {
        // 2 * cw[mid+1] >= cw[i] + cw[j+1], monotone in mid.
        let rhs = self.cw[i].add(self.cw[j + 1]);
        let mut lo = i;
        let mut hi = j;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.cw[mid + 1].mul_f64(2.0).ge(rhs) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

/// Count the depth-m words of a spec without enumerating them.
fn leaf_count(spec: &MoranSpec, start_depth: usize, m: usize) -> Result<u128> {
    let mut count: u128 = 1;
    for d in 0..m {
        let level = spec.level(start_depth + d + 1)?;
        count = count.saturating_mul(level.n as u128);
    }
    Ok(count)
}

/// Depth-first enumeration of the subtree `m` levels below `geom`, calling
/// `emit` for each leaf in left-to-right order.
fn enumerate_leaves(
    spec: &MoranSpec,
    geom: NodeGeom,
    depth: usize,
    remaining: usize,
    emit: &mut impl FnMut(NodeGeom),
) -> Result<()> {
    if remaining == 0 {
        emit(geom);
        return Ok(());
    }
    let level = spec.level(depth + 1)?;
    for j in 0..level.n {
        enumerate_leaves(spec, geom.child(level, j), depth + 1, remaining - 1, emit)?;
    }
    Ok(())
}

/// Discretize the spec's measure at depth m: one atom per depth-m word,
/// placed at the cylinder midpoint and carrying the cylinder mass.
pub fn discretize(spec: &MoranSpec, m: usize) -> Result<AtomMeasure> {
    discretize_with_cap(spec, m, DEFAULT_ATOM_CAP)
}

/// As [`discretize`] with an explicit atom cap.
pub fn discretize_with_cap(spec: &MoranSpec, m: usize, cap: usize) -> Result<AtomMeasure> {
    spec.ensure_admissible()?;
    if m == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let count = leaf_count(spec, 0, m)?;
    if count > cap as u128 {
        return Err(Error::AtomCapExceeded {
            requested: count,
            cap,
        });
    }
    let mut atoms = Vec::with_capacity(count as usize);
    let mut max_len: f64 = 0.0;
    enumerate_leaves(spec, NodeGeom::root(spec), 0, m, &mut |leaf| {
        max_len = max_len.max(leaf.len);
        atoms.push((leaf.midpoint(), leaf.mass));
    })?;
    // The layout places children left to right, so leaves arrive sorted up
    // to rounding at extreme depths; sort defensively if needed.
    if !atoms.windows(2).all(|w| w[0].0 <= w[1].0) {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    AtomMeasure::assemble(atoms, m, 0.5 * max_len)
}

/// The measure conditioned on the cylinder of `sigma`, rescaled by the
/// similarity that maps that cylinder onto [0, 1]: atoms at relative depth
/// m below sigma, positions mapped affinely, masses renormalized.
pub fn conditional_rescaled(spec: &MoranSpec, sigma: &Word, m: usize) -> Result<AtomMeasure> {
    conditional_rescaled_with_cap(spec, sigma, m, DEFAULT_ATOM_CAP)
}

pub fn conditional_rescaled_with_cap(
    spec: &MoranSpec,
    sigma: &Word,
    m: usize,
    cap: usize,
) -> Result<AtomMeasure> {
    spec.ensure_admissible()?;
    if m == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let base = walk(spec, sigma)?;
    let count = leaf_count(spec, sigma.depth(), m)?;
    if count > cap as u128 {
        return Err(Error::AtomCapExceeded {
            requested: count,
            cap,
        });
    }
    let inv_mass = base.mass;
    let lo = base.lo;
    let len = base.len;
    let mut atoms = Vec::with_capacity(count as usize);
    let mut max_len: f64 = 0.0;
    enumerate_leaves(spec, base, sigma.depth(), m, &mut |leaf| {
        let rel_len = leaf.len / len;
        max_len = max_len.max(rel_len);
        atoms.push(((leaf.midpoint() - lo) / len, leaf.mass / inv_mass));
    })?;
    if !atoms.windows(2).all(|w| w[0].0 <= w[1].0) {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    AtomMeasure::assemble(atoms, m, 0.5 * max_len)
}

/// Largest mass any closed ball of a given radius can capture, over a grid
/// of radii, with a least-squares scaling exponent.
#[derive(Debug, Clone)]
pub struct BallMassProfile {
    /// (epsilon, sup over centers of the mass of the open ball).
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of log sup-mass against log epsilon.
    pub fitted_exponent: f64,
    /// Spec-derived reference exponent, when bounds were supplied.
    pub reference_exponent: Option<f64>,
    /// Spec-derived constant in front of the reference bound.
    pub reference_constant: Option<f64>,
}

/// Relative tolerance deciding whether an atom run of span exactly 2 eps
/// (a closed-ball graze) counts as inside an open ball: it does not.
const BALL_SPAN_TIE_TOL: f64 = 1e-12;

/// Profile the measure's open-ball masses on a radius grid. Every radius
/// must be at least twice the transport bound, otherwise the profile would
/// reflect discretization artifacts rather than the measure.
pub fn ball_mass_profile(
    measure: &AtomMeasure,
    epsilons: &[f64],
    bounds: Option<&crate::spec::DerivedBounds>,
) -> Result<BallMassProfile> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("no radii supplied".into()));
    }
    let min_epsilon = 2.0 * measure.w_inf_bound();
    for &eps in epsilons {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius {eps} must be strictly positive"
            )));
        }
        if eps < min_epsilon {
            return Err(Error::EpsilonBelowResolution {
                epsilon: eps,
                min_epsilon,
            });
        }
    }
    let positions = measure.positions();
    let n = positions.len();
    let mut samples = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        // Open-ball masses: atoms i..=j all fit in some (x - eps, x + eps)
        // exactly when their span stays strictly under 2 eps, so slide a
        // maximal strict window with two pointers. Open balls keep the
        // profile free of knife-edge ties where a window of width exactly
        // 2 eps would graze a neighbouring branch's outermost atom; the
        // relative tolerance decides those ties deterministically against
        // rounding in the computed spans (genuine interior runs clear the
        // threshold by orders of magnitude more).
        let width = 2.0 * eps * (1.0 - BALL_SPAN_TIE_TOL);
        let mut best = Dd::ZERO;
        let mut j = 0;
        for i in 0..n {
            if j < i {
                j = i;
            }
            while j + 1 < n && positions[j + 1] - positions[i] < width {
                j += 1;
            }
            let mass = measure.range_mass(i, j);
            if mass.ge(best) {
                best = mass;
            }
        }
        samples.push((eps, best.to_f64()));
    }
    let fitted_exponent = log_log_slope(
        samples.iter().map(|&(e, m)| (e.ln(), m.ln())),
        samples.len(),
    )?;
    Ok(BallMassProfile {
        samples,
        fitted_exponent,
        reference_exponent: bounds.map(|b| b.mass_exponent()),
        reference_constant: bounds.map(|b| b.mass_constant()),
    })
}

/// Least-squares slope of y against x.
fn log_log_slope(pairs: impl Iterator<Item = (f64, f64)>, count: usize) -> Result<f64> {
    if count < 2 {
        return Err(Error::DegenerateWindow(
            "need at least two samples for a slope".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = pairs.collect();
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("no spread in the regressor".into()));
    }
    Ok(sxy / sxx)
}

/// Whether the discretization is fine enough to certify an n-point
/// quantization error: the transport bound must be at most
/// safety * e_{n,r}. Returns the verdict and the margin ratio
/// safety * e / w_inf_bound (at least 1 means adequate).
pub fn depth_adequacy(
    measure: &AtomMeasure,
    target_n: usize,
    r: f64,
    safety: Option<f64>,
) -> Result<(bool, f64)> {
    let solution = crate::solver::dp_solve(measure, target_n, r)?;
    let e_pow_r = solution.per_layer_costs()[target_n.min(measure.len()) - 1];
    Ok(adequacy_for_cost(measure, e_pow_r, r, safety))
}

/// Adequacy verdict when the n-point cost is already known.
pub fn adequacy_for_cost(
    measure: &AtomMeasure,
    e_pow_r: f64,
    r: f64,
    safety: Option<f64>,
) -> (bool, f64) {
    let safety = safety.unwrap_or(DEFAULT_SAFETY);
    let w_inf = measure.w_inf_bound();
    if w_inf == 0.0 {
        // Exact point measures are adequate for themselves.
        return (true, f64::INFINITY);
    }
    let e = e_pow_r.powf(1.0 / r);
    if !(e > 0.0) {
        return (false, 0.0);
    }
    let margin = safety * e / w_inf;
    (margin >= 1.0, margin)
}
