//! Post-solve diagnostics: per-cell error decomposition against an
//! antichain, uniformity statistics across a sweep of point counts,
//! codepoint censuses per cylinder, and dimension estimates from the decay
//! of the quantization error.
//!
//! Everything here is read-only over a solved [`Quantizer`], its
//! [`AtomMeasure`], and an [`Antichain`] at a resolution level matched to
//! the point count by [`choose_k`].

use crate::antichain::{antichain, Antichain};
use crate::cylinder::cylinder;
use crate::error::{Error, Result};
use crate::measure::{adequacy_for_cost, AtomMeasure};
use crate::solver::{dp_solve, Quantizer};
use crate::spec::MoranSpec;
use crate::word::Word;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// How to match an antichain level k to a point count n.
///
/// `Auto` picks the deepest antichain no finer than the codebook:
/// max{k : phi_k <= n}. `Paper(m)` picks the unique k with
/// (m+2)*phi_k <= n < (m+2)*phi_{k+1} for a user-supplied slack constant m;
/// it needs n >= m+2 to be defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    Auto,
    Paper(u32),
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Auto => f.write_str("auto"),
            KRule::Paper(m) => write!(f, "paper:{m}"),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<KRule> {
        if s == "auto" {
            return Ok(KRule::Auto);
        }
        if let Some(m) = s.strip_prefix("paper:") {
            let m: u32 = m
                .parse()
                .map_err(|_| Error::Parse(format!("bad k-rule constant in {s:?}")))?;
            return Ok(KRule::Paper(m));
        }
        Err(Error::Parse(format!(
            "unknown k-rule {s:?}; expected \"auto\" or \"paper:M\""
        )))
    }
}

/// Core of the k-matching rules over any phi table. `phi(k)` must return
/// the cardinality of the level-k antichain; phi(0) is 1 by convention and
/// never queried.
fn choose_k_with(
    mut phi: impl FnMut(usize) -> Result<usize>,
    n: usize,
    rule: KRule,
) -> Result<usize> {
    let slack = match rule {
        KRule::Auto => 1usize,
        KRule::Paper(m) => m as usize + 2,
    };
    if n < slack {
        return Err(Error::KRuleDomain { n, min_n: slack });
    }
    let mut k = 0usize;
    loop {
        let next = phi(k + 1)?;
        if next.saturating_mul(slack) <= n {
            k += 1;
        } else {
            return Ok(k);
        }
        if k > 10_000 {
            return Err(Error::InvalidArgument(
                "antichain level search did not terminate".into(),
            ));
        }
    }
}

/// Match an antichain level to a point count. Returns 0 (the root
/// sentinel) when even the first antichain is too fine.
pub fn choose_k(spec: &MoranSpec, r: f64, n: usize, rule: KRule) -> Result<usize> {
    choose_k_with(|k| Ok(antichain(spec, k, r)?.phi()), n, rule)
}

// --- per-cell error decomposition -------------------------------------------

/// One codepoint's cell: its interval under midpoint boundaries, the mass
/// and error it absorbs, and how many antichain cylinders it meets.
#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    pub index: usize,
    pub codepoint: f64,
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    /// Local error: sum over the cell's atoms of w * |x - codepoint|^r.
    pub error: f64,
    /// Number of antichain cylinders sharing at least one atom with the
    /// cell.
    pub incidence: usize,
}

/// Error decomposition of one quantizer over the cells of its codepoints.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub n: usize,
    pub r: f64,
    /// Antichain level the incidence counts refer to.
    pub k: usize,
    pub rows: Vec<CellRow>,
    /// Smallest per-cell error.
    pub j_min: f64,
    /// Largest per-cell error.
    pub j_max: f64,
    /// Sum of per-cell errors; agrees with the quantizer cost.
    pub total: f64,
}

/// Half-open atom index ranges of the midpoint-boundary cells, boundary
/// atoms going to the left cell. `ranges[t] = (start, end)`.
fn cell_atom_ranges(measure: &AtomMeasure, codepoints: &[f64]) -> Vec<(usize, usize)> {
    let positions = measure.positions();
    let n = codepoints.len();
    let mut ranges = Vec::with_capacity(n);
    let mut start = 0usize;
    for t in 0..n.saturating_sub(1) {
        let boundary = 0.5 * (codepoints[t] + codepoints[t + 1]);
        let end = start + positions[start..].partition_point(|&x| x <= boundary);
        ranges.push((start, end));
        start = end;
    }
    ranges.push((start, positions.len()));
    ranges
}

pub fn cell_report(
    measure: &AtomMeasure,
    quantizer: &Quantizer,
    chain: &Antichain,
) -> Result<CellReport> {
    if quantizer.codepoints.is_empty() {
        return Err(Error::InvalidArgument("quantizer has no codepoints".into()));
    }
    if quantizer.r != chain.r {
        return Err(Error::MismatchedInputs(format!(
            "quantizer solved at r = {} but antichain built at r = {}",
            quantizer.r, chain.r
        )));
    }
    let positions = measure.positions();
    let weights = measure.weights();
    let ranges = cell_atom_ranges(measure, &quantizer.codepoints);

    // Atom index range covered by each cylinder (closed interval hit).
    let cylinder_ranges: Vec<(usize, usize)> = chain
        .cylinders
        .iter()
        .map(|c| {
            let s = positions.partition_point(|&x| x < c.lo);
            let e = positions.partition_point(|&x| x <= c.hi);
            (s, e)
        })
        .filter(|&(s, e)| s < e)
        .collect();

    let support = measure.support();
    let mut rows = Vec::with_capacity(quantizer.codepoints.len());
    for (t, &(cs, ce)) in ranges.iter().enumerate() {
        let a = quantizer.codepoints[t];
        let lo = if t == 0 {
            support.0.min(a)
        } else {
            0.5 * (quantizer.codepoints[t - 1] + a)
        };
        let hi = if t + 1 == quantizer.codepoints.len() {
            support.1.max(a)
        } else {
            0.5 * (a + quantizer.codepoints[t + 1])
        };
        let mut mass = 0.0;
        let mut error = 0.0;
        if cs < ce {
            mass = measure.range_mass(cs, ce - 1).to_f64();
            for l in cs..ce {
                error += weights[l] * (positions[l] - a).abs().powf(quantizer.r);
            }
        }
        let incidence = cylinder_ranges
            .iter()
            .filter(|&&(s, e)| s < ce && cs < e)
            .count();
        rows.push(CellRow {
            index: t,
            codepoint: a,
            lo,
            hi,
            mass,
            error,
            incidence,
        });
    }

    let j_min = rows.iter().map(|r| r.error).fold(f64::INFINITY, f64::min);
    let j_max = rows.iter().map(|r| r.error).fold(0.0f64, f64::max);
    let total: f64 = rows.iter().map(|r| r.error).sum();
    debug_assert!(
        (total - quantizer.cost).abs() <= 1e-10 * quantizer.cost.max(1e-30),
        "cell errors sum to {total}, quantizer cost is {}",
        quantizer.cost
    );
    Ok(CellReport {
        n: quantizer.n,
        r: quantizer.r,
        k: chain.k,
        rows,
        j_min,
        j_max,
        total,
    })
}

// --- codepoint census per cylinder ------------------------------------------

/// One antichain cylinder and how many codepoints landed in it.
#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub word: Word,
    pub lo: f64,
    pub hi: f64,
    /// Codepoints in the closed cylinder; a codepoint exactly on an
    /// endpoint shared by two cylinders counts for the left one.
    pub count: usize,
}

/// Census of codepoints across an antichain, with a three-level
/// descendant coverage statistic.
#[derive(Debug, Clone)]
pub struct CensusReport {
    pub k: usize,
    pub r: f64,
    pub n: usize,
    pub rows: Vec<CensusRow>,
    pub count_min: usize,
    pub count_max: usize,
    /// Cylinders that received no codepoint.
    pub empty_cylinders: usize,
    /// Fraction of (cylinder, three-level descendant) pairs whose
    /// descendant interval holds at least one codepoint; None when the
    /// construction does not extend three levels below the antichain.
    pub grandchild_coverage: Option<f64>,
}

/// Index of the cylinder owning codepoint `c` under the left rule, if any.
fn owning_cylinder(chain: &Antichain, c: f64) -> Option<usize> {
    let cyls = &chain.cylinders;
    let idx = cyls.partition_point(|cy| cy.lo <= c);
    if idx == 0 {
        return None;
    }
    let i = idx - 1;
    if c > cyls[i].hi {
        return None;
    }
    // Exactly on this cylinder's left endpoint while the previous one ends
    // there too: the left neighbour owns it.
    if c == cyls[i].lo && i > 0 && cyls[i - 1].hi == c {
        return Some(i - 1);
    }
    Some(i)
}

/// Fraction of (antichain cylinder, depth+3 descendant) pairs covered by
/// at least one codepoint. None when any cylinder lacks three more levels.
fn grandchild_coverage(
    spec: &MoranSpec,
    chain: &Antichain,
    codepoints: &[f64],
) -> Option<f64> {
    let mut total = 0usize;
    let mut covered = 0usize;
    for row in &chain.cylinders {
        let d = row.word.depth();
        let mut arities = [0usize; 3];
        for (step, arity) in arities.iter_mut().enumerate() {
            *arity = spec.level(d + step + 1).ok()?.n;
        }
        for i1 in 1..=arities[0] {
            for i2 in 1..=arities[1] {
                for i3 in 1..=arities[2] {
                    let mut w = row.word.clone();
                    w = w.child(i1 as u32).child(i2 as u32).child(i3 as u32);
                    let cyl = cylinder(spec, &w, chain.r).ok()?;
                    total += 1;
                    let at = codepoints.partition_point(|&c| c < cyl.lo);
                    if at < codepoints.len() && codepoints[at] <= cyl.hi {
                        covered += 1;
                    }
                }
            }
        }
    }
    if total == 0 {
        return None;
    }
    Some(covered as f64 / total as f64)
}

pub fn census(
    spec: &MoranSpec,
    quantizer: &Quantizer,
    chain: &Antichain,
) -> Result<CensusReport> {
    if quantizer.codepoints.is_empty() {
        return Err(Error::InvalidArgument("quantizer has no codepoints".into()));
    }
    if quantizer.r != chain.r {
        return Err(Error::MismatchedInputs(format!(
            "quantizer solved at r = {} but antichain built at r = {}",
            quantizer.r, chain.r
        )));
    }
    let mut counts = vec![0usize; chain.cylinders.len()];
    for &c in &quantizer.codepoints {
        if let Some(i) = owning_cylinder(chain, c) {
            counts[i] += 1;
        }
    }
    let rows: Vec<CensusRow> = chain
        .cylinders
        .iter()
        .zip(&counts)
        .map(|(cy, &count)| CensusRow {
            word: cy.word.clone(),
            lo: cy.lo,
            hi: cy.hi,
            count,
        })
        .collect();
    debug_assert!(rows.iter().map(|r| r.count).sum::<usize>() <= quantizer.n);
    let count_min = rows.iter().map(|r| r.count).min().unwrap_or(0);
    let count_max = rows.iter().map(|r| r.count).max().unwrap_or(0);
    let empty_cylinders = rows.iter().filter(|r| r.count == 0).count();
    let grandchild_coverage = grandchild_coverage(spec, chain, &quantizer.codepoints);
    Ok(CensusReport {
        k: chain.k,
        r: chain.r,
        n: quantizer.n,
        rows,
        count_min,
        count_max,
        empty_cylinders,
        grandchild_coverage,
    })
}

// --- sweep over point counts ------------------------------------------------

/// Uniformity statistics for one point count n within a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    /// e^r at n (the DP cost).
    pub e_pow_r: f64,
    /// The order-r error itself.
    pub e: f64,
    /// Decrement e^r(n) - e^r(n+1); strictly positive below the atom count.
    pub delta: f64,
    /// Smallest per-cell error.
    #[serde(rename = "J_min")]
    pub j_min: f64,
    /// Largest per-cell error.
    #[serde(rename = "J_max")]
    pub j_max: f64,
    /// n * J_min / e^r; at most 1.
    pub ratio_min: f64,
    /// n * J_max / e^r; at least 1.
    pub ratio_max: f64,
    /// n * delta / e^r.
    pub ratio_delta: f64,
    /// J_max / J_min.
    pub spread: f64,
    /// Antichain level the per-cell statistics were computed against.
    pub k_used: usize,
}

/// Sweep point counts `n_lo..=n_hi` on one measure: a single DP solve
/// supplies every quantizer, and each n gets a cell report against the
/// antichain level picked by `rule`. Fails when the discretization depth
/// is inadequate for `n_hi` unless `enforce_adequacy` is off.
pub fn sweep(
    spec: &MoranSpec,
    measure: &AtomMeasure,
    n_lo: usize,
    n_hi: usize,
    r: f64,
    rule: KRule,
    enforce_adequacy: bool,
) -> Result<Vec<SweepRow>> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(Error::InvalidArgument(format!(
            "point-count range [{n_lo}, {n_hi}] is empty or starts below 1"
        )));
    }
    if n_hi >= measure.len() {
        return Err(Error::InvalidArgument(format!(
            "sweep top {n_hi} must stay below the atom count {} (the error hits zero there)",
            measure.len()
        )));
    }
    let solution = dp_solve(measure, n_hi + 1, r)?;
    let costs = solution.per_layer_costs();
    let (adequate, margin) = adequacy_for_cost(measure, costs[n_hi - 1], r, None);
    if enforce_adequacy && !adequate {
        let e = costs[n_hi - 1].powf(1.0 / r);
        return Err(Error::AdequacyFailed {
            w_inf_bound: measure.w_inf_bound(),
            required: crate::DEFAULT_SAFETY * e,
            margin,
        });
    }

    let mut chains: HashMap<usize, Antichain> = HashMap::new();
    let mut phis: HashMap<usize, usize> = HashMap::new();
    let mut rows = Vec::with_capacity(n_hi - n_lo + 1);
    for n in n_lo..=n_hi {
        let q = solution.quantizer(n)?;
        let k = choose_k_with(
            |k| {
                if let Some(&p) = phis.get(&k) {
                    return Ok(p);
                }
                let p = antichain(spec, k, r)?.phi();
                phis.insert(k, p);
                Ok(p)
            },
            n,
            rule,
        )?;
        if !chains.contains_key(&k) {
            let chain = if k == 0 {
                Antichain::root(spec, r)?
            } else {
                antichain(spec, k, r)?
            };
            chains.insert(k, chain);
        }
        let report = cell_report(measure, &q, &chains[&k])?;
        let e_pow_r = costs[n - 1];
        let delta = e_pow_r - costs[n];
        rows.push(SweepRow {
            n,
            e_pow_r,
            e: e_pow_r.powf(1.0 / r),
            delta,
            j_min: report.j_min,
            j_max: report.j_max,
            ratio_min: n as f64 * report.j_min / e_pow_r,
            ratio_max: n as f64 * report.j_max / e_pow_r,
            ratio_delta: n as f64 * delta / e_pow_r,
            spread: report.j_max / report.j_min,
            k_used: k,
        });
    }
    Ok(rows)
}

// --- dimension estimate -------------------------------------------------

/// Least-squares slope of log n against -log e over a window of sweep
/// rows, with per-n coefficient probes n^{r/s} * e^r.
#[derive(Debug, Clone)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub window: (usize, usize),
    pub r: f64,
    /// The exponent used for the coefficient probes (the fitted slope
    /// unless one was supplied).
    pub s_probe: f64,
    /// (n, n^{r/s} * e^r) samples over the window.
    pub samples: Vec<(usize, f64)>,
}

pub fn dimension_estimate(
    rows: &[SweepRow],
    window: (usize, usize),
    r: f64,
    s_probe: Option<f64>,
) -> Result<DimensionEstimate> {
    let in_window: Vec<&SweepRow> = rows
        .iter()
        .filter(|row| row.n >= window.0 && row.n <= window.1)
        .collect();
    if in_window.len() < 5 {
        return Err(Error::DegenerateWindow(format!(
            "{} sweep rows in [{}, {}]; need at least 5",
            in_window.len(),
            window.0,
            window.1
        )));
    }
    if in_window.iter().any(|row| row.e <= 0.0) {
        return Err(Error::DegenerateWindow(
            "window contains rows with zero error".into(),
        ));
    }
    let xs: Vec<f64> = in_window.iter().map(|row| -row.e.ln()).collect();
    let ys: Vec<f64> = in_window.iter().map(|row| (row.n as f64).ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateWindow(
            "error values do not vary across the window".into(),
        ));
    }
    let slope = sxy / sxx;
    let s = s_probe.unwrap_or(slope);
    if !(s > 0.0) || !slope.is_finite() {
        return Err(Error::DegenerateWindow(format!(
            "non-positive probe exponent {s}"
        )));
    }
    let samples = in_window
        .iter()
        .map(|row| (row.n, (row.n as f64).powf(r / s) * row.e_pow_r))
        .collect();
    Ok(DimensionEstimate {
        slope,
        window,
        r,
        s_probe: s,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::discretize;
    use crate::presets;
    use crate::solver::dp_optimal;

    #[test]
    fn k_rules_parse_and_print() {
        assert_eq!("auto".parse::<KRule>().unwrap(), KRule::Auto);
        assert_eq!("paper:3".parse::<KRule>().unwrap(), KRule::Paper(3));
        assert!("paper:".parse::<KRule>().is_err());
        assert!("fastest".parse::<KRule>().is_err());
        assert_eq!(KRule::Paper(0).to_string(), "paper:0");
    }

    #[test]
    fn auto_rule_on_the_doubling_census() {
        // Middle-thirds at r=2 has phi_k = 2^{k+1}.
        let spec = presets::cantor();
        assert_eq!(choose_k(&spec, 2.0, 64, KRule::Auto).unwrap(), 5);
        assert_eq!(choose_k(&spec, 2.0, 63, KRule::Auto).unwrap(), 4);
        assert_eq!(choose_k(&spec, 2.0, 4, KRule::Auto).unwrap(), 1);
        assert_eq!(choose_k(&spec, 2.0, 3, KRule::Auto).unwrap(), 0);
        assert_eq!(choose_k(&spec, 2.0, 1, KRule::Auto).unwrap(), 0);
    }

    #[test]
    fn paper_rule_matches_a_direct_scan() {
        let spec = presets::cantor();
        // phi_2 = 8, so n = 16 with slack 2 sandwiches at k = 2.
        let k = choose_k(&spec, 2.0, 16, KRule::Paper(0)).unwrap();
        assert_eq!(k, 2);
        // Direct scan oracle over the doubling census.
        let phi = |k: usize| 1usize << (k + 1);
        let n = 16usize;
        let scan = (0..10)
            .find(|&kk| 2 * phi(kk) <= n && n < 2 * phi(kk + 1))
            .unwrap();
        assert_eq!(k, scan);
    }

    #[test]
    fn paper_rule_rejects_tiny_point_counts() {
        let spec = presets::cantor();
        assert!(matches!(
            choose_k(&spec, 2.0, 1, KRule::Paper(0)),
            Err(Error::KRuleDomain { n: 1, min_n: 2 })
        ));
    }

    #[test]
    fn single_cell_report_recovers_the_total_error() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 6).unwrap();
        let q = dp_optimal(&measure, 1, 2.0).unwrap();
        let chain = antichain(&spec, 1, 2.0).unwrap();
        let report = cell_report(&measure, &q, &chain).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!((report.rows[0].error - q.cost).abs() <= 1e-15);
        // One cell covers everything, so it meets every cylinder.
        assert_eq!(report.rows[0].incidence, chain.phi());
        assert!((report.rows[0].mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_two_cell_report_splits_evenly() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 10).unwrap();
        let q = dp_optimal(&measure, 2, 2.0).unwrap();
        let chain = antichain(&spec, 1, 2.0).unwrap();
        let report = cell_report(&measure, &q, &chain).unwrap();
        // Each cell holds half the mass of a third-scale copy:
        // I = (1/2)(1/9) Var at one less depth = (1/144)(1 - 9^-9).
        let expected = (1.0 / 144.0) * (1.0 - 9.0f64.powi(-9));
        for row in &report.rows {
            assert!(
                (row.error - expected).abs() <= 1e-12,
                "{} vs {expected}",
                row.error
            );
            assert!((row.error - 1.0 / 144.0).abs() < 1e-8);
        }
        assert!(report.j_max / report.j_min - 1.0 <= 1e-9);
        assert!((report.total - q.cost).abs() <= 1e-10 * q.cost);
        // Two cells, four cylinders, each cell meets exactly two.
        for row in &report.rows {
            assert_eq!(row.incidence, 2);
        }
    }

    #[test]
    fn report_rejects_mismatched_orders() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 4).unwrap();
        let q = dp_optimal(&measure, 2, 2.0).unwrap();
        let chain = antichain(&spec, 1, 1.0).unwrap();
        assert!(matches!(
            cell_report(&measure, &q, &chain),
            Err(Error::MismatchedInputs(_))
        ));
    }

    #[test]
    fn census_at_matched_resolution_is_one_per_cylinder() {
        // n = 2^{k+1} codepoints against the level-k antichain: exactly one
        // codepoint per cylinder by symmetry.
        let spec = presets::cantor();
        let measure = discretize(&spec, 10).unwrap();
        let chain = antichain(&spec, 2, 2.0).unwrap();
        assert_eq!(chain.phi(), 8);
        let q = dp_optimal(&measure, 8, 2.0).unwrap();
        let report = census(&spec, &q, &chain).unwrap();
        assert!(report.rows.iter().all(|row| row.count == 1));
        assert_eq!(report.count_min, 1);
        assert_eq!(report.count_max, 1);
        assert_eq!(report.empty_cylinders, 0);
        // Every codepoint is the mean of its cylinder, which lies in the
        // removed middle gap: no three-level descendant holds one.
        assert_eq!(report.grandchild_coverage, Some(0.0));
    }

    #[test]
    fn root_census_with_a_deep_codebook_covers_all_grandchildren() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 10).unwrap();
        let chain = Antichain::root(&spec, 2.0).unwrap();
        let q = dp_optimal(&measure, 64, 2.0).unwrap();
        let report = census(&spec, &q, &chain).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].count, 64);
        // 64 codepoints sit one per depth-6 cylinder; every depth-3
        // interval contains eight of them.
        assert_eq!(report.grandchild_coverage, Some(1.0));
    }

    #[test]
    fn sweep_rows_satisfy_the_sandwich_and_positivity() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 8).unwrap();
        let rows = sweep(&spec, &measure, 2, 20, 2.0, KRule::Auto, false).unwrap();
        assert_eq!(rows.len(), 19);
        for row in &rows {
            assert!(row.delta > 0.0, "n={}", row.n);
            assert!(
                row.ratio_min <= 1.0 + 1e-12 && row.ratio_max >= 1.0 - 1e-12,
                "n={}: [{}, {}]",
                row.n,
                row.ratio_min,
                row.ratio_max
            );
            assert!(row.e > 0.0 && row.e_pow_r > 0.0);
            assert!(row.spread >= 1.0 - 1e-12);
        }
        for pair in rows.windows(2) {
            assert!(pair[1].e_pow_r < pair[0].e_pow_r);
            assert!(pair[1].k_used >= pair[0].k_used);
        }
        // Auto k at n = 4 is 1; at n = 16 it is 3.
        assert_eq!(rows.iter().find(|r| r.n == 4).unwrap().k_used, 1);
        assert_eq!(rows.iter().find(|r| r.n == 16).unwrap().k_used, 3);
    }

    #[test]
    fn sweep_rejects_ranges_touching_the_atom_count() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 4).unwrap(); // 16 atoms
        assert!(sweep(&spec, &measure, 2, 16, 2.0, KRule::Auto, false).is_err());
        assert!(sweep(&spec, &measure, 5, 4, 2.0, KRule::Auto, false).is_err());
        assert!(sweep(&spec, &measure, 2, 15, 2.0, KRule::Auto, false).is_ok());
    }

    #[test]
    fn sweep_enforces_depth_adequacy() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 3).unwrap(); // 8 atoms, very coarse
        let err = sweep(&spec, &measure, 2, 7, 2.0, KRule::Auto, true);
        assert!(matches!(err, Err(Error::AdequacyFailed { .. })));
        // The same range passes with enforcement off.
        assert!(sweep(&spec, &measure, 2, 7, 2.0, KRule::Auto, false).is_ok());
    }

    #[test]
    fn dimension_estimate_recovers_the_self_similarity_exponent() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 10).unwrap();
        let rows = sweep(&spec, &measure, 2, 64, 2.0, KRule::Auto, false).unwrap();
        let est = dimension_estimate(&rows, (8, 64), 2.0, None).unwrap();
        let expected = 2.0f64.ln() / 3.0f64.ln();
        assert!(
            (est.slope - expected).abs() < 0.1,
            "slope {} vs {expected}",
            est.slope
        );
        assert!(est.samples.iter().all(|&(_, q)| q > 0.0));
        assert_eq!(est.s_probe, est.slope);
    }

    #[test]
    fn dimension_estimate_rejects_thin_windows() {
        let spec = presets::cantor();
        let measure = discretize(&spec, 6).unwrap();
        let rows = sweep(&spec, &measure, 2, 10, 2.0, KRule::Auto, false).unwrap();
        assert!(matches!(
            dimension_estimate(&rows, (2, 5), 2.0, None),
            Err(Error::DegenerateWindow(_))
        ));
    }
}
