//! Optimal n-point quantizers of order r for sorted atom measures.
//!
//! On the line the optimal quantizer of a finite atom measure induces a
//! partition into contiguous atom runs, so the search space is cuts rather
//! than arbitrary partitions. The cost of covering the first j+1 atoms with
//! t cells satisfies a layered recurrence over the last cell's start, and
//! for r >= 1 the per-layer argmins are non-decreasing in j, which lets a
//! divide-and-conquer scan find every row minimum in O(N log N) cell-cost
//! evaluations per layer.
//!
//! Three engines share one cell-cost kernel:
//!
//! - [`dp_solve`] / [`dp_optimal`]: the exact layered dynamic program; the
//!   solution object can extract the optimal quantizer for every point
//!   count up to the solved maximum.
//! - [`lloyd`]: fixed-point refinement from a user-supplied initialization,
//!   with midpoint boundaries, a left-cell tie rule, and deterministic
//!   empty-cell repair. A local method: it certifies nothing.
//! - [`oracle_optimal`]: exhaustive enumeration of contiguous partitions,
//!   guarded to small instances; exists to cross-check the DP.
//!
//! Cell costs for r = 2 (weighted mean) and r = 1 (lower weighted median)
//! come from compensated prefix sums in O(1). Other orders minimize the
//! cell integrand numerically: golden-section for r > 1 where it is convex;
//! for 0 < r < 1 a coarse scan plus a local polish, and the result is
//! flagged as not certified because the integrand can be multimodal.

use crate::error::{Error, Result};
use crate::measure::AtomMeasure;
use std::fmt;

/// Size guard for the exhaustive oracle. 64 atoms covers depth-6 binary
/// constructions, which the frozen cross-checks rely on.
pub const ORACLE_MAX_ATOMS: usize = 64;
pub const ORACLE_MAX_N: usize = 5;

/// Below this atom count the general-order backend precomputes the full
/// triangular cost table; above it, costs are evaluated on demand.
const GENERAL_EAGER_MAX: usize = 128;

/// Golden-section center tolerance, relative to the cell's span.
const CENTER_TOL_FACTOR: f64 = 1e-12;

pub const LLOYD_MOVE_TOL: f64 = 1e-12;
pub const LLOYD_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DpExact,
    Lloyd,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::DpExact => "dp-exact",
            Method::Lloyd => "lloyd",
            Method::Oracle => "oracle",
        })
    }
}

/// An n-point quantizer for one atom measure.
#[derive(Debug, Clone)]
pub struct Quantizer {
    /// Codepoints, sorted strictly increasing.
    pub codepoints: Vec<f64>,
    /// Number of codepoints (the requested n clamped to the atom count).
    pub n: usize,
    pub r: f64,
    /// The order-r error raised to the r-th power (the quantity the solver
    /// minimizes).
    pub cost: f64,
    pub method: Method,
    /// Minimal costs for every point count 1..=n; a byproduct of the
    /// layered solvers, empty for Lloyd.
    pub per_layer_costs: Vec<f64>,
    /// False when cell centers were found by heuristic search (0 < r < 1).
    pub certified: bool,
}

impl Quantizer {
    /// The order-r error itself (r-th root of the cost).
    pub fn error(&self) -> f64 {
        self.cost.powf(1.0 / self.r)
    }
}

// --- cell costs -------------------------------------------------------------

enum Backend {
    /// r == 2: weighted mean center via prefix moments.
    MeanSquare,
    /// r == 1: lower weighted median center via prefix sums.
    MedianAbsolute,
    /// Any other positive order: numeric center search, optionally with a
    /// precomputed triangular table.
    Numeric { table: Option<Vec<(f64, f64)>> },
}

/// Cost oracle for contiguous atom ranges: the minimal order-r cell error
/// and the minimizing center, for any i <= j.
pub struct CellCostTable<'a> {
    measure: &'a AtomMeasure,
    r: f64,
    backend: Backend,
}

impl<'a> CellCostTable<'a> {
    pub fn new(measure: &'a AtomMeasure, r: f64) -> Result<CellCostTable<'a>> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "order r = {r} must be strictly positive"
            )));
        }
        if measure.is_empty() {
            return Err(Error::InvalidArgument("empty measure".into()));
        }
        let backend = if r == 2.0 {
            Backend::MeanSquare
        } else if r == 1.0 {
            Backend::MedianAbsolute
        } else {
            let mut partial = CellCostTable {
                measure,
                r,
                backend: Backend::Numeric { table: None },
            };
            if measure.len() <= GENERAL_EAGER_MAX {
                let n = measure.len();
                let mut table = Vec::with_capacity(n * (n + 1) / 2);
                for j in 0..n {
                    for i in 0..=j {
                        table.push(partial.numeric_cost_center(i, j));
                    }
                }
                partial.backend = Backend::Numeric { table: Some(table) };
            }
            return Ok(partial);
        };
        Ok(CellCostTable {
            measure,
            r,
            backend,
        })
    }

    pub fn measure(&self) -> &AtomMeasure {
        self.measure
    }

    pub fn order(&self) -> f64 {
        self.r
    }

    /// Whether the center search is exact rather than heuristic.
    pub fn certified(&self) -> bool {
        self.r >= 1.0
    }

    /// Minimal cost and optimal center for atoms i..=j.
    pub fn cost_center(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        if i > j || j >= self.measure.len() {
            return Err(Error::EmptyRange { lo: i, hi: j });
        }
        Ok(self.cost_center_unchecked(i, j))
    }

    fn cost_center_unchecked(&self, i: usize, j: usize) -> (f64, f64) {
        let positions = self.measure.positions();
        if i == j {
            return (0.0, positions[i]);
        }
        match &self.backend {
            Backend::MeanSquare => {
                let w = self.measure.range_mass(i, j);
                let s1 = self.measure.range_moment1(i, j);
                let s2 = self.measure.range_moment2(i, j);
                let center = s1.div(w);
                // sum w x^2 - (sum w x)^2 / sum w, kept compensated until
                // the final rounding.
                let cost = s2.sub(s1.mul(center));
                (cost.to_f64().max(0.0), center.to_f64())
            }
            Backend::MedianAbsolute => {
                let mid = self.measure.lower_median_index(i, j);
                let med = positions[mid];
                let w_left = self.measure.range_mass(i, mid);
                let s_left = self.measure.range_moment1(i, mid);
                let (w_right, s_right) = if mid < j {
                    (
                        self.measure.range_mass(mid + 1, j),
                        self.measure.range_moment1(mid + 1, j),
                    )
                } else {
                    (crate::dd::Dd::ZERO, crate::dd::Dd::ZERO)
                };
                // med * (W_left - W_right) - S_left + S_right
                let cost = s_right
                    .sub(s_left)
                    .add(w_left.sub(w_right).mul_f64(med));
                (cost.to_f64().max(0.0), med)
            }
            Backend::Numeric { table } => match table {
                Some(t) => t[j * (j + 1) / 2 + i],
                None => self.numeric_cost_center(i, j),
            },
        }
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost_center_unchecked(i, j).0
    }

    fn integrand(&self, i: usize, j: usize, a: f64) -> f64 {
        let positions = self.measure.positions();
        let weights = self.measure.weights();
        let mut acc = 0.0;
        for l in i..=j {
            acc += weights[l] * (positions[l] - a).abs().powf(self.r);
        }
        acc
    }

    fn numeric_cost_center(&self, i: usize, j: usize) -> (f64, f64) {
        let positions = self.measure.positions();
        if i == j {
            return (0.0, positions[i]);
        }
        if self.r >= 1.0 {
            // Convex integrand: golden-section over the cell's span.
            let center = self.golden(i, j, positions[i], positions[j]);
            (self.integrand(i, j, center), center)
        } else {
            // Sub-unit orders are multimodal; scan the atoms, then polish
            // around the best one. Heuristic, reported as not certified.
            let mut best_l = i;
            let mut best_v = f64::INFINITY;
            for l in i..=j {
                let v = self.integrand(i, j, positions[l]);
                if v < best_v {
                    best_v = v;
                    best_l = l;
                }
            }
            let lo = positions[best_l.saturating_sub(1).max(i)];
            let hi = positions[(best_l + 1).min(j)];
            let polished = self.golden(i, j, lo, hi);
            let pv = self.integrand(i, j, polished);
            if pv < best_v {
                (pv, polished)
            } else {
                (best_v, positions[best_l])
            }
        }
    }

    fn golden(&self, i: usize, j: usize, mut a: f64, mut b: f64) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let tol = CENTER_TOL_FACTOR
            * (self.measure.positions()[j] - self.measure.positions()[i]).max(f64::MIN_POSITIVE);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.integrand(i, j, c);
        let mut fd = self.integrand(i, j, d);
        while b - a > tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.integrand(i, j, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.integrand(i, j, d);
            }
        }
        0.5 * (a + b)
    }
}

/// Minimal cell error and optimal center for a contiguous atom range.
pub fn cell_cost(table: &CellCostTable<'_>, i: usize, j: usize) -> Result<(f64, f64)> {
    table.cost_center(i, j)
}

// --- layered dynamic program ------------------------------------------------

/// Solved DP state for one measure and order: per-layer optimal costs and
/// the argmin tables needed to extract the quantizer for any point count up
/// to the solved maximum.
pub struct DpSolution<'a> {
    table: CellCostTable<'a>,
    /// argmins[t-1][j] = start index of the last cell in the optimal
    /// t-cell covering of atoms 0..=j.
    argmins: Vec<Vec<u32>>,
    /// per_layer[t-1] = minimal cost with t cells over all atoms; padded
    /// with zeros past the atom count.
    per_layer: Vec<f64>,
}

/// Row minima of an implicitly defined matrix whose row argmins are
/// non-decreasing, by divide and conquer over rows. Row j admits columns
/// clo..=min(chi-1, j); ties resolve to the smallest column.
fn monotone_minima(
    rlo: usize,
    rhi: usize,
    clo: usize,
    chi: usize,
    value: &impl Fn(usize, usize) -> f64,
    out_val: &mut [f64],
    out_arg: &mut [u32],
) {
    if rlo >= rhi {
        return;
    }
    let mid = rlo + (rhi - rlo) / 2;
    let hi = chi.min(mid + 1);
    let mut best = f64::INFINITY;
    let mut best_s = clo;
    for s in clo..hi {
        let v = value(mid, s);
        if v < best {
            best = v;
            best_s = s;
        }
    }
    out_val[mid] = best;
    out_arg[mid] = best_s as u32;
    monotone_minima(rlo, mid, clo, best_s + 1, value, out_val, out_arg);
    monotone_minima(mid + 1, rhi, best_s, chi, value, out_val, out_arg);
}

/// Run the layered DP up to `n_max` cells. Point counts above the atom
/// count are clamped: their costs are zero and their quantizers place one
/// codepoint per atom.
pub fn dp_solve<'a>(measure: &'a AtomMeasure, n_max: usize, r: f64) -> Result<DpSolution<'a>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument(
            "point count must be at least 1".into(),
        ));
    }
    let table = CellCostTable::new(measure, r)?;
    let n_atoms = measure.len();
    let n_eff = n_max.min(n_atoms);

    let mut argmins: Vec<Vec<u32>> = Vec::with_capacity(n_eff);
    let mut per_layer: Vec<f64> = Vec::with_capacity(n_max);

    let mut prev: Vec<f64> = (0..n_atoms).map(|j| table.cost(0, j)).collect();
    argmins.push(vec![0u32; n_atoms]);
    per_layer.push(prev[n_atoms - 1]);

    for t in 2..=n_eff {
        let mut cur = vec![0.0f64; n_atoms];
        let mut arg = vec![0u32; n_atoms];
        {
            let value = |j: usize, s: usize| prev[s - 1] + table.cost(s, j);
            monotone_minima(t - 1, n_atoms, t - 1, n_atoms, &value, &mut cur, &mut arg);
        }
        // Covering fewer atoms than cells costs nothing; layer t+1 never
        // reads these entries but keep them tidy.
        for v in cur.iter_mut().take(t - 1) {
            *v = 0.0;
        }
        per_layer.push(cur[n_atoms - 1]);
        argmins.push(arg);
        prev = cur;
    }
    per_layer.resize(n_max, 0.0);

    Ok(DpSolution {
        table,
        argmins,
        per_layer,
    })
}

impl<'a> DpSolution<'a> {
    /// Minimal costs for point counts 1..=n_max.
    pub fn per_layer_costs(&self) -> &[f64] {
        &self.per_layer
    }

    pub fn measure(&self) -> &AtomMeasure {
        self.table.measure()
    }

    pub fn order(&self) -> f64 {
        self.table.order()
    }

    /// Extract the optimal quantizer for any point count up to the solved
    /// maximum.
    pub fn quantizer(&self, n: usize) -> Result<Quantizer> {
        if n == 0 || n > self.per_layer.len() {
            return Err(Error::InvalidArgument(format!(
                "point count {n} outside the solved range 1..={}",
                self.per_layer.len()
            )));
        }
        let n_atoms = self.table.measure().len();
        let n_eff = n.min(n_atoms);
        let mut cells = Vec::with_capacity(n_eff);
        let mut j = n_atoms - 1;
        for t in (1..=n_eff).rev() {
            let s = self.argmins[t - 1][j] as usize;
            cells.push((s, j));
            if t > 1 {
                j = s - 1;
            }
        }
        cells.reverse();
        let codepoints: Vec<f64> = cells
            .iter()
            .map(|&(s, e)| self.table.cost_center_unchecked(s, e).1)
            .collect();
        debug_assert!(codepoints.windows(2).all(|w| w[0] < w[1]));
        Ok(Quantizer {
            codepoints,
            n: n_eff,
            r: self.table.order(),
            cost: self.per_layer[n - 1],
            method: Method::DpExact,
            per_layer_costs: self.per_layer[..n].to_vec(),
            certified: self.table.certified(),
        })
    }
}

/// The optimal quantizer with at most `n_max` points.
pub fn dp_optimal(measure: &AtomMeasure, n_max: usize, r: f64) -> Result<Quantizer> {
    dp_solve(measure, n_max, r)?.quantizer(n_max)
}

// --- Lloyd refinement ---------------------------------------------------

/// Refine an initial codepoint set by alternating midpoint-boundary
/// assignment (boundary atoms go to the left cell) and cell recentering,
/// with deterministic empty-cell repair. Stops when no codepoint moves more
/// than [`LLOYD_MOVE_TOL`] or after [`LLOYD_MAX_ITERS`] rounds.
pub fn lloyd(measure: &AtomMeasure, initial: &[f64], r: f64) -> Result<Quantizer> {
    if initial.is_empty() {
        return Err(Error::InvalidArgument("no initial codepoints".into()));
    }
    if initial.len() > measure.len() {
        return Err(Error::InvalidArgument(format!(
            "{} codepoints for {} atoms",
            initial.len(),
            measure.len()
        )));
    }
    if initial.iter().any(|x| !x.is_finite())
        || initial.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::UnsortedInitial);
    }
    let table = CellCostTable::new(measure, r)?;
    let positions = measure.positions();
    let n_atoms = measure.len();
    let n = initial.len();
    let mut codepoints = initial.to_vec();
    let mut cost = f64::INFINITY;

    for _ in 0..LLOYD_MAX_ITERS {
        // Half-open atom ranges per cell; boundary atoms go left.
        let mut cells: Vec<(usize, usize)> = Vec::with_capacity(n);
        let mut start = 0usize;
        for t in 0..n - 1 {
            let boundary = 0.5 * (codepoints[t] + codepoints[t + 1]);
            let end = start + positions[start..].partition_point(|&x| x <= boundary);
            cells.push((start, end));
            start = end;
        }
        cells.push((start, n_atoms));

        // Repair empty cells by splitting the costliest cell at its own
        // center. Each repair keeps the cell count and never raises cost.
        loop {
            let Some(empty_at) = cells.iter().position(|&(s, e)| s == e) else {
                break;
            };
            let donor = cells
                .iter()
                .enumerate()
                .filter(|(_, &(s, e))| e > s + 1)
                .map(|(idx, &(s, e))| (idx, table.cost_center_unchecked(s, e - 1)))
                .max_by(|a, b| {
                    (a.1).0.partial_cmp(&(b.1).0).unwrap().then(
                        // Tie on cost: take the leftmost donor.
                        b.0.cmp(&a.0),
                    )
                });
            let Some((donor_at, (_, donor_center))) = donor else {
                // Fewer distinct atoms than cells; nothing to split.
                break;
            };
            let (ds, de) = cells[donor_at];
            let mut cut = ds + positions[ds..de].partition_point(|&x| x <= donor_center);
            if cut == ds || cut == de {
                // Degenerate split (center outside the strict interior);
                // fall back to the index midpoint.
                cut = ds + (de - ds) / 2;
            }
            cells.remove(empty_at);
            let donor_at = cells
                .iter()
                .position(|&(s, e)| (s, e) == (ds, de))
                .expect("donor survived the removal");
            cells[donor_at] = (ds, cut);
            cells.insert(donor_at + 1, (cut, de));
        }

        // Recenter and measure.
        let mut new_codepoints = Vec::with_capacity(n);
        let mut new_cost = 0.0;
        for &(s, e) in &cells {
            let (c, center) = table.cost_center_unchecked(s, e - 1);
            new_cost += c;
            new_codepoints.push(center);
        }
        debug_assert!(
            new_cost <= cost * (1.0 + 1e-12) + 1e-15,
            "cost rose from {cost} to {new_cost}"
        );
        let movement = new_codepoints
            .iter()
            .zip(codepoints.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        codepoints = new_codepoints;
        cost = new_cost;
        if movement < LLOYD_MOVE_TOL {
            break;
        }
    }

    Ok(Quantizer {
        n: codepoints.len(),
        codepoints,
        r,
        cost,
        method: Method::Lloyd,
        per_layer_costs: Vec::new(),
        certified: false,
    })
}

// --- exhaustive oracle ----------------------------------------------------

fn enumerate_partitions(
    table: &CellCostTable<'_>,
    start: usize,
    cells_left: usize,
    acc: f64,
    cuts: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    let n_atoms = table.measure().len();
    if acc >= best.0 {
        return;
    }
    if cells_left == 1 {
        let total = acc + table.cost(start, n_atoms - 1);
        if total < best.0 {
            *best = (total, cuts.clone());
        }
        return;
    }
    // This cell covers start..=end; leave at least one atom per later cell.
    for end in start..=(n_atoms - cells_left) {
        let cell = table.cost(start, end);
        cuts.push(end + 1);
        enumerate_partitions(table, end + 1, cells_left - 1, acc + cell, cuts, best);
        cuts.pop();
    }
}

/// Exhaustively optimal quantizer over all contiguous partitions. Refuses
/// instances above the size guard; intended as a cross-check for the DP.
pub fn oracle_optimal(measure: &AtomMeasure, n: usize, r: f64) -> Result<Quantizer> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "point count must be at least 1".into(),
        ));
    }
    let n_atoms = measure.len();
    let n_eff = n.min(n_atoms);
    if n_atoms > ORACLE_MAX_ATOMS || n_eff > ORACLE_MAX_N {
        return Err(Error::OracleGuard { atoms: n_atoms, n });
    }
    let table = CellCostTable::new(measure, r)?;
    let mut per_layer = Vec::with_capacity(n_eff);
    let mut final_cuts = Vec::new();
    for t in 1..=n_eff {
        let mut best = (f64::INFINITY, Vec::new());
        let mut cuts = Vec::with_capacity(t);
        enumerate_partitions(&table, 0, t, 0.0, &mut cuts, &mut best);
        per_layer.push(best.0);
        if t == n_eff {
            final_cuts = best.1;
        }
    }
    let mut codepoints = Vec::with_capacity(n_eff);
    let mut start = 0usize;
    for &cut in final_cuts.iter().chain(std::iter::once(&n_atoms)) {
        codepoints.push(table.cost_center_unchecked(start, cut - 1).1);
        start = cut;
    }
    Ok(Quantizer {
        codepoints,
        n: n_eff,
        r,
        cost: per_layer[n_eff - 1],
        method: Method::Oracle,
        per_layer_costs: per_layer,
        certified: r >= 1.0,
    })
}

// --- similarity transport -------------------------------------------------

/// Push a quantizer through the affine map x -> scale * x + shift. The
/// optimal quantizer of the pushforward measure is the pushforward of the
/// optimal quantizer, with cost scaled by |scale|^r.
pub fn similarity_transport(quantizer: &Quantizer, scale: f64, shift: f64) -> Result<Quantizer> {
    if scale == 0.0 {
        return Err(Error::ZeroScale);
    }
    let mut codepoints: Vec<f64> = quantizer
        .codepoints
        .iter()
        .map(|&x| scale * x + shift)
        .collect();
    if scale < 0.0 {
        codepoints.reverse();
    }
    let factor = scale.abs().powf(quantizer.r);
    Ok(Quantizer {
        codepoints,
        n: quantizer.n,
        r: quantizer.r,
        cost: quantizer.cost * factor,
        method: quantizer.method,
        per_layer_costs: quantizer
            .per_layer_costs
            .iter()
            .map(|&c| c * factor)
            .collect(),
        certified: quantizer.certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize, AtomMeasure};
    use crate::presets;

    fn two_point() -> AtomMeasure {
        AtomMeasure::from_points(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn cell_cost_mean_square() {
        let m = two_point();
        let table = CellCostTable::new(&m, 2.0).unwrap();
        let (cost, center) = cell_cost(&table, 0, 1).unwrap();
        assert_eq!(center, 0.5);
        assert!((cost - 0.25).abs() < 1e-16);
        // Single atoms cost nothing and sit at themselves.
        assert_eq!(cell_cost(&table, 1, 1).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn cell_cost_median_takes_the_lower_atom() {
        let m = two_point();
        let table = CellCostTable::new(&m, 1.0).unwrap();
        let (cost, center) = cell_cost(&table, 0, 1).unwrap();
        assert_eq!(center, 0.0);
        assert!((cost - 0.5).abs() < 1e-16);
    }

    #[test]
    fn cell_cost_rejects_bad_ranges() {
        let m = two_point();
        let table = CellCostTable::new(&m, 2.0).unwrap();
        assert!(matches!(
            cell_cost(&table, 1, 0),
            Err(Error::EmptyRange { lo: 1, hi: 0 })
        ));
        assert!(cell_cost(&table, 0, 2).is_err());
    }

    #[test]
    fn full_range_mean_square_cost_is_the_variance() {
        // Depth-m truncations of the middle-thirds measure have variance
        // (1/8)(1 - 9^-m): the one-level recursion V_m = V_{m-1}/9 + 1/9
        // starting from V_0 = 0.
        let spec = presets::cantor();
        for m in [1usize, 4, 8] {
            let measure = discretize(&spec, m).unwrap();
            let table = CellCostTable::new(&measure, 2.0).unwrap();
            let (cost, center) = cell_cost(&table, 0, measure.len() - 1).unwrap();
            let expected = 0.125 * (1.0 - 9.0f64.powi(-(m as i32)));
            assert!((cost - expected).abs() < 1e-14, "m={m}: {cost} vs {expected}");
            assert!((center - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn dp_matches_oracle_on_a_fixed_instance() {
        let m = AtomMeasure::from_points(
            vec![0.05, 0.12, 0.3, 0.31, 0.55, 0.7, 0.71, 0.95],
            vec![1.0, 2.0, 1.0, 3.0, 1.0, 2.0, 2.0, 1.0],
        )
        .unwrap();
        for r in [1.0, 1.5, 2.0] {
            for n in 1..=5 {
                let dp = dp_optimal(&m, n, r).unwrap();
                let oracle = oracle_optimal(&m, n, r).unwrap();
                assert!(
                    (dp.cost - oracle.cost).abs() <= 1e-12 * oracle.cost.max(1e-30),
                    "r={r} n={n}: dp {} oracle {}",
                    dp.cost,
                    oracle.cost
                );
                assert_eq!(dp.per_layer_costs.len(), n);
            }
        }
    }

    #[test]
    fn per_layer_costs_strictly_decrease_until_exhausted() {
        let spec = presets::alternating_two_three();
        let measure = discretize(&spec, 4).unwrap();
        let solution = dp_solve(&measure, 12, 2.0).unwrap();
        let costs = solution.per_layer_costs();
        for t in 1..12.min(measure.len()) {
            assert!(
                costs[t] < costs[t - 1],
                "cost did not drop from {} points to {}",
                t,
                t + 1
            );
        }
    }

    #[test]
    fn middle_thirds_two_point_quantizer() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 8).unwrap();
        let q = dp_optimal(&measure, 2, 2.0).unwrap();
        // Two points split the support into its two thirds; centers sit at
        // the thirds' means.
        assert!((q.codepoints[0] - 1.0 / 6.0).abs() < 1e-9);
        assert!((q.codepoints[1] - 5.0 / 6.0).abs() < 1e-9);
        let expected = (1.0 / 72.0) * (1.0 - 9.0f64.powi(-7));
        assert!((q.cost - expected).abs() < 1e-12);
        assert!(q.certified);
    }

    #[test]
    fn requested_points_clamp_to_atom_count() {
        let m = two_point();
        let q = dp_optimal(&m, 5, 2.0).unwrap();
        assert_eq!(q.n, 2);
        assert_eq!(q.codepoints, vec![0.0, 1.0]);
        assert_eq!(q.cost, 0.0);
        assert_eq!(q.per_layer_costs.len(), 5);
        assert_eq!(q.per_layer_costs[3], 0.0);
    }

    #[test]
    fn lloyd_from_a_symmetric_start_finds_the_optimum() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 8).unwrap();
        let q = lloyd(&measure, &[0.4, 0.6], 2.0).unwrap();
        let dp = dp_optimal(&measure, 2, 2.0).unwrap();
        assert!((q.codepoints[0] - dp.codepoints[0]).abs() < 1e-12);
        assert!((q.codepoints[1] - dp.codepoints[1]).abs() < 1e-12);
        assert!(q.cost >= dp.cost - 1e-15);
        assert!((q.cost - dp.cost).abs() <= 1e-10 * dp.cost);
        assert_eq!(q.method, Method::Lloyd);
    }

    #[test]
    fn lloyd_repairs_empty_cells() {
        // Both initial codepoints sit right of the support, so every atom
        // lands in the first cell and the second starts empty.
        let spec = presets::cantor();
        let measure = discretize(&spec, 6).unwrap();
        let q = lloyd(&measure, &[2.0, 3.0], 2.0).unwrap();
        let dp = dp_optimal(&measure, 2, 2.0).unwrap();
        assert!((q.cost - dp.cost).abs() <= 1e-10 * dp.cost);
    }

    #[test]
    fn lloyd_rejects_unsorted_starts() {
        let m = two_point();
        assert!(matches!(
            lloyd(&m, &[0.5, 0.5], 2.0),
            Err(Error::UnsortedInitial)
        ));
        assert!(matches!(
            lloyd(&m, &[0.7, 0.2], 2.0),
            Err(Error::UnsortedInitial)
        ));
    }

    #[test]
    fn oracle_guard_refuses_big_instances() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 7).unwrap(); // 128 atoms
        assert!(matches!(
            oracle_optimal(&measure, 2, 2.0),
            Err(Error::OracleGuard { atoms: 128, n: 2 })
        ));
        let small = discretize(&spec, 3).unwrap();
        assert!(matches!(
            oracle_optimal(&small, 6, 2.0),
            Err(Error::OracleGuard { atoms: 8, n: 6 })
        ));
    }

    #[test]
    fn transport_scales_codepoints_and_cost() {
        let m = two_point();
        let q = dp_optimal(&m, 2, 2.0).unwrap();
        let t = similarity_transport(&q, 3.0, 1.0).unwrap();
        assert_eq!(t.codepoints, vec![1.0, 4.0]);
        assert_eq!(t.cost, 0.0);
        // Negative scale reverses the order to keep codepoints sorted.
        let neg = similarity_transport(&q, -1.0, 0.0).unwrap();
        assert_eq!(neg.codepoints, vec![-1.0, 0.0]);
        assert!(matches!(
            similarity_transport(&q, 0.0, 0.0),
            Err(Error::ZeroScale)
        ));
    }

    #[test]
    fn transported_conditional_solution_solves_the_restricted_problem() {
        // Solve on the rescaled conditional measure of a branch, transport
        // back by the branch geometry, and compare against the direct
        // solution on that branch's atoms.
        let spec = presets::cantor();
        let sigma = crate::word::Word::from_indices(vec![1]);
        let cond = crate::measure::conditional_rescaled(&spec, &sigma, 5).unwrap();
        let cyl = crate::cylinder::cylinder(&spec, &sigma, 2.0).unwrap();
        let q = dp_optimal(&cond, 3, 2.0).unwrap();
        let transported = similarity_transport(&q, cyl.length, cyl.lo).unwrap();

        // Direct: atoms of the full measure restricted to the branch,
        // renormalized.
        let full = discretize(&spec, 6).unwrap();
        let mut pos = Vec::new();
        let mut wts = Vec::new();
        for (x, w) in full.positions().iter().zip(full.weights()) {
            if *x >= cyl.lo && *x <= cyl.hi {
                pos.push(*x);
                wts.push(*w);
            }
        }
        let restricted = AtomMeasure::from_points(pos, wts).unwrap();
        let direct = dp_optimal(&restricted, 3, 2.0).unwrap();
        for (a, b) in transported.codepoints.iter().zip(&direct.codepoints) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        // Both are probability measures on the same branch, so the costs
        // agree outright.
        assert!(
            (transported.cost - direct.cost).abs() <= 1e-12 * direct.cost.max(1e-30),
            "{} vs {}",
            transported.cost,
            direct.cost
        );
    }

    #[test]
    fn sub_unit_orders_are_flagged_uncertified() {
        let m = AtomMeasure::from_points(vec![0.0, 0.4, 1.0], vec![1.0, 1.0, 1.0]).unwrap();
        let q = dp_optimal(&m, 2, 0.5).unwrap();
        assert!(!q.certified);
        // The optimum for sub-unit orders tends to sit on an atom.
        assert!(q.codepoints.iter().all(|c| c.is_finite()));
    }
}
