//! Labelled descriptor datasets built from synthetic sequences.

use crate::container::ActivationContainer;
use crate::error::Result;
use crate::head::LabeledSeries;
use crate::stream::{descriptor_series, WindowConfig};
use crate::synth::{generate_sequence, SequenceKind, SequenceSpec};

/// Which sequence kind is labelled positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Positive {
    #[default]
    Structured,
    Noise,
}

impl Positive {
    pub fn label(self, kind: SequenceKind) -> bool {
        match self {
            Self::Structured => kind == SequenceKind::Structured,
            Self::Noise => kind == SequenceKind::Noise,
        }
    }
}

/// Per-sequence seed; keeps every sequence reproducible on its own.
pub fn sequence_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index as u64)
        .rotate_left(17)
}

/// Balanced set of `count` containers, alternating structured and noise.
pub fn synthetic_containers(
    count: usize,
    spec: &SequenceSpec,
    seed: u64,
) -> Result<Vec<ActivationContainer>> {
    (0..count)
        .map(|i| {
            let kind = if i % 2 == 0 {
                SequenceKind::Structured
            } else {
                SequenceKind::Noise
            };
            generate_sequence(spec, kind, sequence_seed(seed, i))
        })
        .collect()
}

pub fn labeled_series(
    container: &ActivationContainer,
    window: &WindowConfig,
    positive: Positive,
) -> Result<LabeledSeries> {
    let series = descriptor_series(container.rows_f64(), window)?;
    Ok(LabeledSeries {
        steps: series.matrix(),
        label: positive.label(SequenceKind::from_flags(container.flags)),
    })
}

/// Generates and featurizes a balanced detection set.
pub fn synthetic_detection_set(
    count: usize,
    spec: &SequenceSpec,
    window: &WindowConfig,
    seed: u64,
    positive: Positive,
) -> Result<Vec<LabeledSeries>> {
    synthetic_containers(count, spec, seed)?
        .iter()
        .map(|c| labeled_series(c, window, positive))
        .collect()
}
