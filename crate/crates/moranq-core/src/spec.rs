//! Level-by-level description of a Moran construction on the line.
//!
//! A spec lists, for each construction level, the number of children every
//! interval splits into, the contraction ratio and branch probability of
//! each child, and how the children are placed inside the parent. The level
//! list may cycle, which defines the construction at every depth; a
//! non-cycled list only supports computations down to its own length.
//!
//! Specs load from JSON:
//!
//! ```json
//! {
//!   "base_interval": [0, 1],
//!   "cycle": true,
//!   "levels": [
//!     {
//!       "n": 2,
//!       "ratios": ["1/3", "1/3"],
//!       "probs": [0.5, 0.5],
//!       "layout": { "mode": "even-internal-gaps" }
//!     }
//!   ]
//! }
//! ```
//!
//! Numeric entries are accepted either as JSON numbers or as strings of the
//! form "a/b", which are parsed as exact integer fractions and then rounded
//! once to f64.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer};
use std::path::Path;

/// Tolerance for the simplex checks (ratio sums, probability sums) during
/// validation. Exact-fraction inputs land within an ulp of the constraint
/// boundary; this band keeps them admissible without letting real
/// violations through.
pub const SUM_TOL: f64 = 1e-12;

/// Placement of a level's children inside their parent interval, expressed
/// in parent-relative coordinates (parent rescaled to [0, 1]).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Layout {
    /// Children in order, flush with both parent endpoints, the slack split
    /// into equal gaps between consecutive children. With ratios (1/3, 1/3)
    /// this reproduces the middle-thirds construction.
    EvenInternalGaps,
    /// Children packed against the parent's left endpoint, slack on the
    /// right.
    FlushLeft,
    /// Each child's left offset given explicitly.
    ExplicitOffsets {
        #[serde(deserialize_with = "de_numbers")]
        offsets: Vec<f64>,
    },
}

impl Default for Layout {
    fn default() -> Self {
        Layout::EvenInternalGaps
    }
}

/// One construction level.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Level {
    /// Number of children.
    pub n: usize,
    /// Contraction ratio of each child, relative to the parent's length.
    #[serde(deserialize_with = "de_numbers")]
    pub ratios: Vec<f64>,
    /// Branch probability of each child.
    #[serde(deserialize_with = "de_numbers")]
    pub probs: Vec<f64>,
    /// Child placement; defaults to even internal gaps.
    #[serde(default)]
    pub layout: Layout,
}

/// A full Moran construction description.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MoranSpec {
    /// The root interval; defaults to [0, 1].
    #[serde(default = "default_base_interval", deserialize_with = "de_pair")]
    pub base_interval: [f64; 2],
    /// Whether the level list repeats beyond its own length.
    #[serde(default)]
    pub cycle: bool,
    pub levels: Vec<Level>,
}

fn default_base_interval() -> [f64; 2] {
    [0.0, 1.0]
}

/// Extremes of the per-child ratios and probabilities across all listed
/// levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedBounds {
    pub p_lo: f64,
    pub p_hi: f64,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl DerivedBounds {
    /// One-step worst-case weight shrink factor for order r: the smallest
    /// probability times the smallest ratio to the r-th power. Weight
    /// antichains are thresholded by powers of this value.
    pub fn eta(&self, r: f64) -> f64 {
        self.p_lo * self.c_lo.powf(r)
    }

    /// Log of [`Self::eta`], built from the same per-step form the cylinder
    /// walk accumulates, so threshold comparisons stay consistent.
    pub fn log_eta(&self, r: f64) -> f64 {
        self.p_lo.ln() + r * self.c_lo.ln()
    }

    /// Reference local-regularity exponent: ball mass scales no slower than
    /// epsilon to this power.
    pub fn mass_exponent(&self) -> f64 {
        self.p_hi.ln() / self.c_lo.ln()
    }

    /// Constant in front of the ball-mass bound.
    pub fn mass_constant(&self) -> f64 {
        4.0 / self.p_hi
    }
}

/// Outcome of validating a spec for a given order r.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub bounds: Option<DerivedBounds>,
    pub r: f64,
    /// eta_r when the spec is admissible and r is positive.
    pub eta_r: Option<f64>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MoranSpec {
    /// Load a spec from a JSON string.
    pub fn from_json(text: &str) -> Result<MoranSpec> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Load a spec from a JSON file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<MoranSpec> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn base_len(&self) -> f64 {
        self.base_interval[1] - self.base_interval[0]
    }

    /// Number of levels a computation may use: unbounded when cycling.
    pub fn available_depth(&self) -> Option<usize> {
        if self.cycle {
            None
        } else {
            Some(self.levels.len())
        }
    }

    /// The level governing the split at depth k (1-based).
    pub fn level(&self, depth: usize) -> Result<&Level> {
        debug_assert!(depth >= 1);
        if self.levels.is_empty() {
            return Err(Error::InvalidSpec(vec!["spec lists no levels".into()]));
        }
        if self.cycle {
            Ok(&self.levels[(depth - 1) % self.levels.len()])
        } else {
            self.levels.get(depth - 1).ok_or(Error::DepthUnavailable {
                requested: depth,
                available: self.levels.len(),
            })
        }
    }

    /// Ratio/probability extremes across the listed levels.
    pub fn bounds(&self) -> Result<DerivedBounds> {
        let mut p_lo = f64::INFINITY;
        let mut p_hi = f64::NEG_INFINITY;
        let mut c_lo = f64::INFINITY;
        let mut c_hi = f64::NEG_INFINITY;
        for level in &self.levels {
            for &p in &level.probs {
                p_lo = p_lo.min(p);
                p_hi = p_hi.max(p);
            }
            for &c in &level.ratios {
                c_lo = c_lo.min(c);
                c_hi = c_hi.max(c);
            }
        }
        if !p_lo.is_finite() || !c_lo.is_finite() {
            return Err(Error::InvalidSpec(vec!["spec lists no levels".into()]));
        }
        Ok(DerivedBounds {
            p_lo,
            p_hi,
            c_lo,
            c_hi,
        })
    }

    /// All admissibility violations, independent of any order r.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.levels.is_empty() {
            out.push("spec lists no levels".to_string());
            return out;
        }
        if !(self.base_interval[0] < self.base_interval[1]) {
            out.push(format!(
                "base interval [{}, {}] is not increasing",
                self.base_interval[0], self.base_interval[1]
            ));
        }
        for (li, level) in self.levels.iter().enumerate() {
            let tag = format!("level {li}");
            if level.n < 2 {
                out.push(format!("{tag}: n = {} but every level needs n >= 2", level.n));
            }
            if level.ratios.len() != level.n {
                out.push(format!(
                    "{tag}: {} ratios listed for n = {}",
                    level.ratios.len(),
                    level.n
                ));
            }
            if level.probs.len() != level.n {
                out.push(format!(
                    "{tag}: {} probs listed for n = {}",
                    level.probs.len(),
                    level.n
                ));
            }
            if level.ratios.iter().any(|&c| !(c > 0.0)) {
                out.push(format!("{tag}: ratios must be strictly positive"));
            }
            let ratio_sum: f64 = level.ratios.iter().sum();
            if ratio_sum > 1.0 + SUM_TOL {
                out.push(format!("{tag}: ratios sum to {ratio_sum} > 1"));
            }
            if level.probs.iter().any(|&p| !(p > 0.0)) {
                out.push(format!("{tag}: probs must be strictly positive"));
            }
            let prob_sum: f64 = level.probs.iter().sum();
            if (prob_sum - 1.0).abs() > SUM_TOL {
                out.push(format!("{tag}: probs sum to {prob_sum}, not 1"));
            }
            if let Layout::ExplicitOffsets { offsets } = &level.layout {
                if offsets.len() != level.n {
                    out.push(format!(
                        "{tag}: {} offsets listed for n = {}",
                        offsets.len(),
                        level.n
                    ));
                } else if level.ratios.len() == level.n {
                    if offsets[0] < -SUM_TOL {
                        out.push(format!("{tag}: first offset {} is negative", offsets[0]));
                    }
                    for j in 0..level.n {
                        let right = offsets[j] + level.ratios[j];
                        let limit = if j + 1 < level.n { offsets[j + 1] } else { 1.0 };
                        if right > limit + SUM_TOL {
                            out.push(format!(
                                "{tag}: child {j} ends at {right}, past {limit}"
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    /// Validate the spec and report the derived constants for order r.
    pub fn validate(&self, r: f64) -> ValidationReport {
        let mut violations = self.violations();
        if !(r > 0.0) {
            violations.push(format!("order r = {r} must be strictly positive"));
        }
        let bounds = if self.levels.is_empty() {
            None
        } else {
            self.bounds().ok()
        };
        let eta_r = match (&bounds, violations.is_empty()) {
            (Some(b), true) => Some(b.eta(r)),
            _ => None,
        };
        ValidationReport {
            violations,
            bounds,
            r,
            eta_r,
        }
    }

    /// Error unless the spec passes all admissibility checks.
    pub fn ensure_admissible(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(violations))
        }
    }
}

// --- JSON number handling -------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrFraction {
    Number(f64),
    Text(String),
}

fn parse_number(v: NumberOrFraction) -> std::result::Result<f64, String> {
    match v {
        NumberOrFraction::Number(x) => Ok(x),
        NumberOrFraction::Text(s) => {
            let t = s.trim();
            if let Some((num, den)) = t.split_once('/') {
                let num: i64 = num
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad fraction numerator in {s:?}"))?;
                let den: i64 = den
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad fraction denominator in {s:?}"))?;
                if den == 0 {
                    return Err(format!("zero denominator in {s:?}"));
                }
                Ok(num as f64 / den as f64)
            } else {
                t.parse::<f64>().map_err(|_| format!("bad number {s:?}"))
            }
        }
    }
}

fn de_numbers<'de, D>(deserializer: D) -> std::result::Result<Vec<f64>, D::Error>
where
    D: Deserializer<'de>,
{
    let raw = Vec::<NumberOrFraction>::deserialize(deserializer)?;
    raw.into_iter()
        .map(|v| parse_number(v).map_err(serde::de::Error::custom))
        .collect()
}

fn de_pair<'de, D>(deserializer: D) -> std::result::Result<[f64; 2], D::Error>
where
    D: Deserializer<'de>,
{
    let raw = <[NumberOrFraction; 2]>::deserialize(deserializer)?;
    let [a, b] = raw;
    Ok([
        parse_number(a).map_err(serde::de::Error::custom)?,
        parse_number(b).map_err(serde::de::Error::custom)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn middle_thirds_spec_is_admissible_with_known_constants() {
        let spec = presets::cantor();
        let report = spec.validate(2.0);
        assert!(report.is_admissible(), "{:?}", report.violations);
        let b = report.bounds.unwrap();
        assert_eq!(b.p_lo, 0.5);
        assert_eq!(b.p_hi, 0.5);
        assert!((b.c_lo - 1.0 / 3.0).abs() < 1e-15);
        // eta_2 = (1/2) * (1/3)^2 = 1/18
        assert!((report.eta_r.unwrap() - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn overfull_ratios_are_rejected() {
        let mut spec = presets::cantor();
        spec.levels[0].ratios = vec![0.6, 0.5];
        let report = spec.validate(2.0);
        assert!(!report.is_admissible());
        assert!(report.violations.iter().any(|v| v.contains("ratios sum")));
        assert_eq!(report.eta_r, None);
    }

    #[test]
    fn zero_ratio_and_bad_probs_are_rejected() {
        let mut spec = presets::cantor();
        spec.levels[0].ratios = vec![0.0, 0.5];
        spec.levels[0].probs = vec![0.7, 0.7];
        let report = spec.validate(1.0);
        assert!(report.violations.iter().any(|v| v.contains("strictly positive")));
        assert!(report.violations.iter().any(|v| v.contains("probs sum")));
    }

    #[test]
    fn single_child_level_is_rejected() {
        let mut spec = presets::cantor();
        spec.levels[0].n = 1;
        spec.levels[0].ratios = vec![0.5];
        spec.levels[0].probs = vec![1.0];
        assert!(!spec.validate(2.0).is_admissible());
    }

    #[test]
    fn fractions_parse_exactly() {
        let spec = MoranSpec::from_json(
            r#"{
                "cycle": true,
                "levels": [
                    {"n": 2, "ratios": ["1/3", "1/3"], "probs": ["1/2", "1/2"]}
                ]
            }"#,
        )
        .unwrap();
        assert_eq!(spec.levels[0].ratios[0], 1.0 / 3.0);
        assert_eq!(spec.levels[0].probs[0], 0.5);
        assert_eq!(spec.base_interval, [0.0, 1.0]);
        assert_eq!(spec.levels[0].layout, Layout::EvenInternalGaps);
    }

    #[test]
    fn explicit_offsets_parse_and_validate() {
        let spec = MoranSpec::from_json(
            r#"{
                "cycle": false,
                "levels": [
                    {
                        "n": 2,
                        "ratios": [0.25, 0.25],
                        "probs": [0.5, 0.5],
                        "layout": {"mode": "explicit-offsets", "offsets": [0.1, 0.6]}
                    }
                ]
            }"#,
        )
        .unwrap();
        assert!(spec.validate(2.0).is_admissible());

        // Overlapping children must be flagged.
        let bad = MoranSpec::from_json(
            r#"{
                "levels": [
                    {
                        "n": 2,
                        "ratios": [0.5, 0.25],
                        "probs": [0.5, 0.5],
                        "layout": {"mode": "explicit-offsets", "offsets": [0.1, 0.5]}
                    }
                ]
            }"#,
        )
        .unwrap();
        assert!(!bad.validate(2.0).is_admissible());
    }

    #[test]
    fn cycled_levels_wrap_and_finite_ones_do_not() {
        let spec = presets::alternating_two_three();
        assert_eq!(spec.level(1).unwrap().n, 2);
        assert_eq!(spec.level(2).unwrap().n, 3);
        assert_eq!(spec.level(3).unwrap().n, 2);

        let mut finite = spec.clone();
        finite.cycle = false;
        assert!(finite.level(2).is_ok());
        assert!(matches!(
            finite.level(3),
            Err(Error::DepthUnavailable {
                requested: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            MoranSpec::from_json("{ not json"),
            Err(Error::Parse(_))
        ));
    }
}
