use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cell::{
    backward_into, bce_loss, cell_step, head_forward, output_probability, project, CellState,
    LossReduction,
};
use super::metrics::auroc;
use super::params::{CellKind, HeadParams};
use crate::error::{invalid, Error, Result};
use crate::features::FEATURE_COUNT;
use crate::optim::{adam_step, AdamConfig, AdamState, Parameters};

/// A descriptor series with its sequence-level label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub steps: Vec<[f64; FEATURE_COUNT]>,
    pub label: bool,
}

/// Per-slot z-scoring with statistics frozen from a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    /// Pools every step of every series. Slots with (near) zero spread get
    /// unit scale.
    pub fn fit(series: &[&LabeledSeries]) -> Result<Self> {
        let mut count = 0usize;
        let mut mean = vec![0.0; FEATURE_COUNT];
        let mut m2 = [0.0; FEATURE_COUNT];
        for s in series {
            for row in &s.steps {
                count += 1;
                for j in 0..FEATURE_COUNT {
                    let delta = row[j] - mean[j];
                    mean[j] += delta / count as f64;
                    m2[j] += delta * (row[j] - mean[j]);
                }
            }
        }
        if count == 0 {
            return Err(Error::Empty("standardizer input"));
        }
        let std = m2
            .iter()
            .zip(&mean)
            .map(|(&v, &m)| {
                let s = (v / count as f64).sqrt();
                if s > 1e-12 * (1.0 + m.abs()) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply_series(&self, steps: &[[f64; FEATURE_COUNT]]) -> Vec<Vec<f64>> {
        steps.iter().map(|r| self.apply(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub cell: CellKind,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub validation_fraction: f64,
    pub gate_threshold: f64,
    pub reduction: LossReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            cell: CellKind::Gru,
            hidden: 16,
            epochs: 30,
            batch_size: 16,
            adam: AdamConfig::default(),
            seed: 0,
            validation_fraction: 0.2,
            gate_threshold: 0.5,
            reduction: LossReduction::FinalStep,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && a.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(a.weight_decay >= 0.0 && a.weight_decay.is_finite()) {
            return Err(invalid("weight_decay", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err(invalid("betas", "must lie in [0, 1)"));
        }
        if !(a.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if self.hidden == 0 || self.batch_size == 0 {
            return Err(invalid("hidden/batch_size", "must be positive"));
        }
        if !(self.gate_threshold > 0.0 && self.gate_threshold < 1.0) {
            return Err(invalid("gate_threshold", "must lie in (0, 1)"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(invalid("validation_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auroc: f64,
}

/// Trained parameters plus the frozen input standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHead {
    pub params: HeadParams,
    pub standardizer: Standardizer,
}

impl TrainedHead {
    pub fn probabilities(&self, steps: &[[f64; FEATURE_COUNT]]) -> Result<Vec<f64>> {
        head_forward(&self.params, &self.standardizer.apply_series(steps))
    }

    /// Final-step probability of a whole series.
    pub fn score(&self, steps: &[[f64; FEATURE_COUNT]]) -> Result<f64> {
        Ok(*self.probabilities(steps)?.last().expect("non-empty output"))
    }

    pub fn auroc(&self, data: &[LabeledSeries]) -> Result<f64> {
        let scores = data
            .iter()
            .map(|s| self.score(&s.steps))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<bool> = data.iter().map(|s| s.label).collect();
        auroc(&scores, &labels)
    }
}

/// Incremental scoring: one descriptor in, one probability out, state kept
/// between calls. Matches [`TrainedHead::probabilities`] step for step.
pub struct HeadStream<'a> {
    head: &'a TrainedHead,
    state: CellState,
}

impl<'a> HeadStream<'a> {
    pub fn new(head: &'a TrainedHead) -> Self {
        Self {
            head,
            state: CellState::zeros(head.params.kind(), head.params.hidden()),
        }
    }

    pub fn push(&mut self, features: &[f64]) -> Result<f64> {
        let p = &self.head.params;
        let f = project(p, &self.head.standardizer.apply(features))?;
        self.state = cell_step(p, &f, &self.state)?;
        Ok(output_probability(p, &self.state.h))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: TrainedHead,
    pub history: Vec<EpochMetrics>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

impl TrainOutcome {
    pub fn final_auroc(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |m| m.val_auroc)
    }
}

/// Stratified split: each class contributes `ceil(fraction * size)` shuffled
/// members (at least one, never all) to validation.
pub fn stratified_split(
    labels: &[bool],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a17_5eed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::SingleClass("training labels"));
        }
        idx.shuffle(&mut rng);
        let k = ((fraction * idx.len() as f64).ceil() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

fn mean_loss(
    params: &HeadParams,
    data: &[(Vec<Vec<f64>>, bool)],
    reduction: LossReduction,
) -> Result<(f64, Vec<f64>)> {
    let mut total = 0.0;
    let mut scores = Vec::with_capacity(data.len());
    for (x, y) in data {
        let probs = head_forward(params, x)?;
        total += bce_loss(&probs, *y, reduction)?;
        scores.push(*probs.last().expect("non-empty"));
    }
    Ok((total / data.len() as f64, scores))
}

/// Minibatch Adam over BPTT gradients. Deterministic for a fixed seed.
pub fn train(data: &[LabeledSeries], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.iter().any(|s| s.steps.is_empty()) {
        return Err(Error::Empty("descriptor series"));
    }
    let labels: Vec<bool> = data.iter().map(|s| s.label).collect();
    let (train_idx, val_idx) = stratified_split(&labels, config.validation_fraction, config.seed)?;
    let train_refs: Vec<&LabeledSeries> = train_idx.iter().map(|&i| &data[i]).collect();
    let standardizer = Standardizer::fit(&train_refs)?;
    let prep = |idx: &[usize]| -> Vec<(Vec<Vec<f64>>, bool)> {
        idx.iter()
            .map(|&i| (standardizer.apply_series(&data[i].steps), data[i].label))
            .collect()
    };
    let train_set = prep(&train_idx);
    let val_set = prep(&val_idx);
    let val_labels: Vec<bool> = val_set.iter().map(|(_, y)| *y).collect();

    let mut params = HeadParams::init(config.cell, config.hidden, config.seed)?;
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            for &i in batch {
                let (x, y) = &train_set[i];
                backward_into(&params, x, *y, config.reduction, &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grads
                .tensors_mut()
                .into_iter()
                .for_each(|t| t.iter_mut().for_each(|g| *g *= scale));
            adam_step(&mut params, &grads, &mut state, &config.adam)?;
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("head parameters after update"));
        }
        let (train_loss, _) = mean_loss(&params, &train_set, config.reduction)?;
        let (val_loss, val_scores) = mean_loss(&params, &val_set, config.reduction)?;
        history.push(EpochMetrics {
            epoch,
            train_loss,
            val_loss,
            val_auroc: auroc(&val_scores, &val_labels)?,
        });
    }
    Ok(TrainOutcome {
        head: TrainedHead {
            params,
            standardizer,
        },
        history,
        train_indices: train_idx,
        validation_indices: val_idx,
    })
}
