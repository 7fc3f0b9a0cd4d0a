//! Randomized invariants across the pipeline: random atom measures for the
//! solver stack, random cycled constructions for the cylinder machinery.

use moranq_core::{
    antichain, discretize, dp_solve, lloyd, oracle_optimal, presets, similarity_transport,
    AtomMeasure, CellCostTable, Layout, Level, MoranSpec, Word,
};
use proptest::collection::vec;
use proptest::prelude::*;
use std::collections::HashSet;

// --- strategies -----------------------------------------------------------

/// Strictly increasing positions in [0, 1] built from positive gaps, plus
/// positive weights; `from_points` normalizes the mass.
fn atom_measure(max_atoms: usize) -> impl Strategy<Value = AtomMeasure> {
    (2..=max_atoms)
        .prop_flat_map(|n| (vec(0.05f64..1.0, n), vec(0.05f64..1.0, n)))
        .prop_map(|(gaps, weights)| {
            let total: f64 = gaps.iter().sum();
            let mut x = 0.0;
            let positions: Vec<f64> = gaps
                .iter()
                .map(|g| {
                    x += g / total;
                    x
                })
                .collect();
            AtomMeasure::from_points(positions, weights).expect("valid instance")
        })
}

/// A random admissible cycled construction with one or two levels.
fn moran_spec() -> impl Strategy<Value = MoranSpec> {
    let level = (2usize..=3).prop_flat_map(|n| {
        (
            vec(0.05f64..0.45, n),
            vec(0.1f64..1.0, n),
            Just(n),
        )
            .prop_map(|(raw_ratios, raw_probs, n)| {
                // Scale ratios down so they sum to at most 0.9, leaving
                // genuine gaps between children.
                let rsum: f64 = raw_ratios.iter().sum();
                let scale = 0.9 / rsum.max(1.0);
                let ratios: Vec<f64> = raw_ratios.iter().map(|c| c * scale).collect();
                let psum: f64 = raw_probs.iter().sum();
                let probs: Vec<f64> = raw_probs.iter().map(|p| p / psum).collect();
                Level {
                    n,
                    ratios,
                    probs,
                    layout: Layout::EvenInternalGaps,
                }
            })
    });
    vec(level, 1..=2).prop_map(|levels| MoranSpec {
        base_interval: [0.0, 1.0],
        cycle: true,
        levels,
    })
}

/// Reference quadratic-time DP over the same cell-cost table.
fn quadratic_dp(measure: &AtomMeasure, n_max: usize, r: f64) -> Vec<f64> {
    let table = CellCostTable::new(measure, r).unwrap();
    let n_atoms = measure.len();
    let n_eff = n_max.min(n_atoms);
    let mut prev: Vec<f64> = (0..n_atoms).map(|j| table.cost(0, j)).collect();
    let mut per_layer = vec![prev[n_atoms - 1]];
    for t in 2..=n_eff {
        let mut cur = vec![0.0f64; n_atoms];
        for j in (t - 1)..n_atoms {
            let mut best = f64::INFINITY;
            for s in (t - 1)..=j {
                let v = prev[s - 1] + table.cost(s, j);
                if v < best {
                    best = v;
                }
            }
            cur[j] = best;
        }
        per_layer.push(cur[n_atoms - 1]);
        prev = cur;
    }
    per_layer
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// --- solver invariants ------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The divide-and-conquer DP agrees with a brute-force quadratic DP on
    /// every layer, for integral and fractional orders alike.
    #[test]
    fn dp_matches_quadratic_reference(
        measure in atom_measure(40),
        n_max in 1usize..=6,
        r in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)],
    ) {
        let fast = dp_solve(&measure, n_max, r).unwrap();
        let slow = quadratic_dp(&measure, n_max, r);
        for (t, (&a, &b)) in fast.per_layer_costs().iter().zip(slow.iter()).enumerate() {
            prop_assert!(
                rel_close(a, b, 1e-12) || (a - b).abs() < 1e-15,
                "layer {} differs: {} vs {}", t + 1, a, b
            );
        }
    }

    /// The DP cost matches exhaustive enumeration of contiguous partitions.
    #[test]
    fn dp_matches_exhaustive_search(
        measure in atom_measure(16),
        n in 1usize..=4,
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let dp = dp_solve(&measure, n, r).unwrap().quantizer(n).unwrap();
        let oracle = oracle_optimal(&measure, n, r).unwrap();
        prop_assert!(
            rel_close(dp.cost, oracle.cost, 1e-12) || (dp.cost - oracle.cost).abs() < 1e-15,
            "dp {} vs oracle {}", dp.cost, oracle.cost
        );
    }

    /// Adding a codepoint strictly reduces the cost until it hits zero.
    #[test]
    fn per_layer_costs_strictly_decrease(
        measure in atom_measure(24),
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let n_max = measure.len().min(8);
        let sol = dp_solve(&measure, n_max, r).unwrap();
        let costs = sol.per_layer_costs();
        for w in costs.windows(2) {
            prop_assert!(w[1] < w[0] || w[0] == 0.0, "costs {:?} not decreasing", costs);
        }
    }

    /// Lloyd refinement never beats the exact optimum, and started at the
    /// optimum it stays there.
    #[test]
    fn lloyd_is_dominated_by_dp(
        measure in atom_measure(24),
        n in 2usize..=5,
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        prop_assume!(n <= measure.len());
        let dp = dp_solve(&measure, n, r).unwrap().quantizer(n).unwrap();
        // Random-ish but deterministic start: every (len/n)-th atom.
        let step = measure.len() / n;
        let starts: Vec<f64> = (0..n).map(|i| measure.positions()[i * step]).collect();
        let refined = lloyd(&measure, &starts, r).unwrap();
        prop_assert!(refined.cost >= dp.cost - 1e-12 * dp.cost.max(1.0));
        let at_optimum = lloyd(&measure, &dp.codepoints, r).unwrap();
        prop_assert!(rel_close(at_optimum.cost, dp.cost, 1e-10)
            || (at_optimum.cost - dp.cost).abs() < 1e-14);
    }

    /// Pushing a quantizer through x -> scale*x + shift matches re-solving
    /// on the transformed measure.
    #[test]
    fn transport_matches_resolve(
        measure in atom_measure(20),
        n in 1usize..=4,
        r in prop_oneof![Just(1.0), Just(2.0)],
        scale in prop_oneof![0.1f64..4.0, -4.0f64..-0.1],
        shift in -2.0f64..2.0,
    ) {
        let q = dp_solve(&measure, n, r).unwrap().quantizer(n).unwrap();
        let moved = similarity_transport(&q, scale, shift).unwrap();
        let transformed: Vec<f64> =
            measure.positions().iter().map(|x| scale * x + shift).collect();
        let image = AtomMeasure::from_points(transformed, measure.weights().to_vec()).unwrap();
        let direct = dp_solve(&image, n, r).unwrap().quantizer(n).unwrap();
        prop_assert!(
            rel_close(moved.cost, direct.cost, 1e-10) || (moved.cost - direct.cost).abs() < 1e-14,
            "transported {} vs resolved {}", moved.cost, direct.cost
        );
    }

    /// Successive decrements of the exact cost are bounded by
    /// 3^r * diam^r / (l + 1) for every layer l (support inside [0, 1]).
    #[test]
    fn decrement_bound_holds_on_exact_solutions(
        measure in atom_measure(14),
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let n_max = measure.len().min(5);
        let sol = dp_solve(&measure, n_max, r).unwrap();
        let costs = sol.per_layer_costs();
        let diam = measure.diameter();
        for l in 1..costs.len() {
            let delta = costs[l - 1] - costs[l];
            let bound = 3f64.powf(r) * diam.powf(r) / (l as f64 + 1.0);
            prop_assert!(
                delta <= bound * (1.0 + 1e-9),
                "layer {}: decrement {} exceeds bound {}", l, delta, bound
            );
        }
    }
}

// --- construction invariants -------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every word at the antichain's deepest level has exactly one prefix in
    /// the antichain, so the antichain is a maximal prefix partition.
    #[test]
    fn antichain_is_a_prefix_partition(
        spec in moran_spec(),
        k in 1usize..=4,
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let chain = antichain(&spec, k, r).unwrap();
        let members: HashSet<&Word> = chain.words().collect();
        let probe_depth = chain.words().map(|w| w.depth()).max().unwrap();
        prop_assume!(probe_depth <= 12);
        let mut frontier = vec![Word::root()];
        for d in 1..=probe_depth {
            let level = spec.level(d).unwrap();
            let mut next = Vec::with_capacity(frontier.len() * level.n);
            for w in &frontier {
                for j in 1..=level.n as u32 {
                    next.push(w.child(j));
                }
            }
            frontier = next;
        }
        for w in &frontier {
            let mut hits = 0;
            for d in 0..=w.depth() {
                if members.contains(&w.prefix(d)) {
                    hits += 1;
                }
            }
            prop_assert!(hits == 1, "word {} has {} antichain prefixes", w, hits);
        }
    }

    /// Antichain member weights are pairwise comparable within one
    /// worst-case shrink factor, and their masses partition the measure.
    #[test]
    fn antichain_weights_comparable_and_masses_sum(
        spec in moran_spec(),
        k in 1usize..=5,
        r in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let chain = antichain(&spec, k, r).unwrap();
        let weights: Vec<f64> = chain.cylinders.iter().map(|c| c.weight).collect();
        let w_min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let w_max = weights.iter().cloned().fold(0.0, f64::max);
        prop_assert!(
            w_max / w_min <= (1.0 / chain.eta_r) * (1.0 + 1e-9),
            "weight spread {} exceeds 1/eta = {}", w_max / w_min, 1.0 / chain.eta_r
        );
        let mass: f64 = chain.cylinders.iter().map(|c| c.mass).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-9, "masses sum to {}", mass);
    }
}

// --- deterministic cross-depth checks ----------------------------------------

/// Refining the discretization moves the quantization error by no more than
/// the sum of the two transport bounds.
#[test]
fn error_is_stable_under_depth_refinement() {
    for spec in [presets::cantor(), presets::alternating_two_three()] {
        for m in [3usize, 4, 5] {
            let coarse = discretize(&spec, m).unwrap();
            let fine = discretize(&spec, m + 2).unwrap();
            let budget = coarse.w_inf_bound() + fine.w_inf_bound();
            for n in [2usize, 3, 5, 8] {
                for r in [1.0, 2.0] {
                    let e_coarse = dp_solve(&coarse, n, r)
                        .unwrap()
                        .quantizer(n)
                        .unwrap()
                        .error();
                    let e_fine = dp_solve(&fine, n, r).unwrap().quantizer(n).unwrap().error();
                    assert!(
                        (e_coarse - e_fine).abs() <= budget + 1e-12,
                        "m={m} n={n} r={r}: |{e_coarse} - {e_fine}| > {budget}"
                    );
                }
            }
        }
    }
}
