//! Cylinder intervals of the construction tree and their weights.
//!
//! The cylinder of a word is the interval reached by applying the layout
//! recursion level by level. Alongside the geometry it carries the measure
//! mass (product of branch probabilities) and the order-r weight
//! mass * length^r, where length is taken relative to the base interval so
//! that weights are scale free. Weights are also kept in log space: the
//! antichain machinery compares deep products against thresholds, and raw
//! products underflow long before log sums lose accuracy.

use crate::error::{Error, Result};
use crate::spec::{Layout, Level, MoranSpec};
use crate::word::Word;

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub word: Word,
    /// Left endpoint, in base-interval coordinates.
    pub lo: f64,
    /// Right endpoint.
    pub hi: f64,
    /// Interval length, accumulated multiplicatively (equals hi - lo up to
    /// rounding).
    pub length: f64,
    /// Measure of the cylinder: the product of branch probabilities.
    pub mass: f64,
    /// Order-r weight mass * (length / base length)^r.
    pub weight: f64,
    /// Log of the weight, accumulated as a sum of per-level terms.
    pub log_weight: f64,
}

/// Running geometry of one tree node during a walk. Tracks the absolute
/// interval, the length relative to the base interval, the mass, and their
/// logs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeGeom {
    pub lo: f64,
    pub len: f64,
    pub rel_len: f64,
    pub mass: f64,
    pub log_rel_len: f64,
    pub log_mass: f64,
}

impl NodeGeom {
    pub fn root(spec: &MoranSpec) -> NodeGeom {
        NodeGeom {
            lo: spec.base_interval[0],
            len: spec.base_len(),
            rel_len: 1.0,
            mass: 1.0,
            log_rel_len: 0.0,
            log_mass: 0.0,
        }
    }

    /// Geometry of child j (0-based) under the given level.
    pub fn child(&self, level: &Level, j: usize) -> NodeGeom {
        let ratio = level.ratios[j];
        let prob = level.probs[j];
        NodeGeom {
            lo: self.lo + relative_offset(level, j) * self.len,
            len: self.len * ratio,
            rel_len: self.rel_len * ratio,
            mass: self.mass * prob,
            log_rel_len: self.log_rel_len + ratio.ln(),
            log_mass: self.log_mass + prob.ln(),
        }
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.len
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * self.len
    }

    pub fn log_weight(&self, r: f64) -> f64 {
        self.log_mass + r * self.log_rel_len
    }

    pub fn to_cylinder(&self, word: Word, r: f64) -> Cylinder {
        Cylinder {
            word,
            lo: self.lo,
            hi: self.hi(),
            length: self.len,
            mass: self.mass,
            weight: self.mass * self.rel_len.powf(r),
            log_weight: self.log_weight(r),
        }
    }
}

/// Left offset of child j inside its parent, in parent-relative
/// coordinates.
fn relative_offset(level: &Level, j: usize) -> f64 {
    let lead: f64 = level.ratios[..j].iter().sum();
    match &level.layout {
        Layout::EvenInternalGaps => {
            // Slack can dip a hair below zero when ratios sum to 1 up to
            // rounding; clamp so children never overlap.
            let slack = (1.0 - level.ratios.iter().sum::<f64>()).max(0.0);
            let gap = slack / (level.n - 1) as f64;
            lead + gap * j as f64
        }
        Layout::FlushLeft => lead,
        Layout::ExplicitOffsets { offsets } => offsets[j],
    }
}

/// Walk the spec down to `word`, returning the node geometry.
pub(crate) fn walk(spec: &MoranSpec, word: &Word) -> Result<NodeGeom> {
    let mut geom = NodeGeom::root(spec);
    for (pos, &ix) in word.indices().iter().enumerate() {
        let level = spec.level(pos + 1)?;
        if ix == 0 || ix as usize > level.n {
            return Err(Error::IndexOutOfRange {
                position: pos,
                index: ix,
                children: level.n,
            });
        }
        geom = geom.child(level, ix as usize - 1);
    }
    Ok(geom)
}

/// The cylinder of `word` with order-r weight.
pub fn cylinder(spec: &MoranSpec, word: &Word, r: f64) -> Result<Cylinder> {
    spec.ensure_admissible()?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "order r = {r} must be strictly positive"
        )));
    }
    Ok(walk(spec, word)?.to_cylinder(word.clone(), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn middle_thirds_second_level_cylinder() {
        // Word (1, 2): left third, then its right child = [2/9, 3/9].
        let spec = presets::cantor();
        let c = cylinder(&spec, &Word::from_indices(vec![1, 2]), 2.0).unwrap();
        assert!((c.lo - 2.0 / 9.0).abs() < 1e-15);
        assert!((c.hi - 3.0 / 9.0).abs() < 1e-15);
        assert!((c.length - 1.0 / 9.0).abs() < 1e-16);
        assert!((c.mass - 0.25).abs() < 1e-16);
        // weight = (1/4) * (1/9)^2 = 1/324
        assert!((c.weight - 1.0 / 324.0).abs() < 1e-18);
        assert!((c.log_weight - (1.0f64 / 324.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn length_matches_interval_to_relative_rounding() {
        let spec = presets::alternating_two_three();
        for word in [
            Word::from_indices(vec![1]),
            Word::from_indices(vec![2, 1]),
            Word::from_indices(vec![2, 3, 1, 2]),
        ] {
            let c = cylinder(&spec, &word, 1.0).unwrap();
            assert!(
                ((c.hi - c.lo) - c.length).abs() <= 1e-12 * c.length,
                "{word}: hi-lo = {}, length = {}",
                c.hi - c.lo,
                c.length
            );
        }
    }

    /// Hand evaluation of the even-gap layout on the alternating preset.
    ///
    /// Depth 1 uses the two-child level: ratios (0.3, 0.25) leave slack
    /// 0.45, one internal gap, so child 2 starts at 0.3 + 0.45 = 0.75 and
    /// spans [0.75, 1.0]. Depth 2 uses the three-child level inside a
    /// parent of length 0.25: ratios (0.2, 0.2, 0.2) leave slack 0.4 split
    /// into two gaps of 0.2; child 3 sits at relative offset
    /// 0.2 + 0.2 + 2 * 0.2 = 0.8, so absolutely [0.95, 1.0] with
    /// length 0.05. Mass is 0.4 * 0.2 = 0.08.
    #[test]
    fn alternating_spec_word_2_3_by_hand() {
        let spec = presets::alternating_two_three();
        let c = cylinder(&spec, &Word::from_indices(vec![2, 3]), 2.0).unwrap();
        assert!((c.lo - 0.95).abs() < 1e-12);
        assert!((c.hi - 1.0).abs() < 1e-12);
        assert!((c.length - 0.05).abs() < 1e-12);
        assert!((c.mass - 0.08).abs() < 1e-12);
        // weight at r = 2: 0.08 * 0.05^2 = 2e-4
        assert!((c.weight - 2e-4).abs() < 1e-15);
    }

    #[test]
    fn flush_left_and_explicit_offsets_place_children() {
        let mut spec = presets::cantor();
        spec.levels[0].layout = Layout::FlushLeft;
        let c = cylinder(&spec, &Word::from_indices(vec![2]), 1.0).unwrap();
        assert!((c.lo - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.hi - 2.0 / 3.0).abs() < 1e-15);

        spec.levels[0].layout = Layout::ExplicitOffsets {
            offsets: vec![0.1, 0.55],
        };
        let c = cylinder(&spec, &Word::from_indices(vec![2]), 1.0).unwrap();
        assert!((c.lo - 0.55).abs() < 1e-15);
    }

    #[test]
    fn root_cylinder_is_the_base_interval() {
        let mut spec = presets::cantor();
        spec.base_interval = [2.0, 5.0];
        let c = cylinder(&spec, &Word::root(), 2.0).unwrap();
        assert_eq!(c.lo, 2.0);
        assert_eq!(c.hi, 5.0);
        assert_eq!(c.mass, 1.0);
        // Weights are relative to the base length, so the root has weight 1.
        assert_eq!(c.weight, 1.0);
        assert_eq!(c.log_weight, 0.0);
    }

    #[test]
    fn bad_word_index_is_reported() {
        let spec = presets::cantor();
        assert!(matches!(
            cylinder(&spec, &Word::from_indices(vec![3]), 2.0),
            Err(Error::IndexOutOfRange {
                position: 0,
                index: 3,
                children: 2
            })
        ));
    }
}
