//! Ready-made specs used across tests, benchmarks, and documentation.

use crate::spec::{Layout, Level, MoranSpec};

/// The classical middle-thirds construction with equal branch
/// probabilities: one cycled level, two children of ratio 1/3 each.
pub fn cantor() -> MoranSpec {
    MoranSpec {
        base_interval: [0.0, 1.0],
        cycle: true,
        levels: vec![Level {
            n: 2,
            ratios: vec![1.0 / 3.0, 1.0 / 3.0],
            probs: vec![0.5, 0.5],
            layout: Layout::EvenInternalGaps,
        }],
    }
}

/// An inhomogeneous construction alternating a two-child level and a
/// three-child level, with unequal ratios and probabilities. Exercises the
/// non-self-similar code paths.
pub fn alternating_two_three() -> MoranSpec {
    MoranSpec {
        base_interval: [0.0, 1.0],
        cycle: true,
        levels: vec![
            Level {
                n: 2,
                ratios: vec![0.3, 0.25],
                probs: vec![0.6, 0.4],
                layout: Layout::EvenInternalGaps,
            },
            Level {
                n: 3,
                ratios: vec![0.2, 0.2, 0.2],
                probs: vec![0.5, 0.3, 0.2],
                layout: Layout::EvenInternalGaps,
            },
        ],
    }
}
