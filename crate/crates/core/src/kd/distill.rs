//! Distillation loss and the minibatch training loop shared by pre-training
//! (`alpha = 1`, no teacher) and post-projection fine-tuning.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::DenseNet;
use crate::error::{invalid, Error, Result};
use crate::optim::{adam_step, AdamConfig, AdamState, Parameters};

pub fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    scaled.iter().map(|z| z - lse).collect()
}

/// `KL(p || q)` from log-probabilities; zero-probability terms of `p`
/// contribute nothing.
fn kl_from_logs(log_p: &[f64], log_q: &[f64]) -> f64 {
    log_p
        .iter()
        .zip(log_q)
        .map(|(&lp, &lq)| {
            let p = lp.exp();
            if p > 0.0 {
                p * (lp - lq)
            } else {
                0.0
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillParams {
    pub alpha: f64,
    pub temperature: f64,
}

impl DistillParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(
                "alpha",
                format!("must lie in [0, 1], got {}", self.alpha),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", "must be positive"));
        }
        Ok(())
    }
}

/// `alpha * CE(student, label) + (1 - alpha) * T^2 * KL(p_teacher^T || p_student^T)`
/// and its gradient with respect to the student logits.
pub fn distill_loss(
    student: &[f64],
    teacher: &[f64],
    label: usize,
    params: DistillParams,
) -> Result<(f64, Vec<f64>)> {
    params.validate()?;
    if student.len() != teacher.len() {
        return Err(Error::ShapeMismatch {
            context: "teacher logits",
            expected: student.len(),
            actual: teacher.len(),
        });
    }
    if label >= student.len() {
        return Err(invalid(
            "label",
            format!("{label} out of range for {} classes", student.len()),
        ));
    }
    let DistillParams {
        alpha,
        temperature: t,
    } = params;
    let log_s = log_softmax(student, 1.0);
    let ce = -log_s[label];
    let log_st = log_softmax(student, t);
    let log_tt = log_softmax(teacher, t);
    let kl = kl_from_logs(&log_tt, &log_st).max(0.0);
    let loss = alpha * ce + (1.0 - alpha) * t * t * kl;
    let grad = (0..student.len())
        .map(|j| {
            let hard = log_s[j].exp() - if j == label { 1.0 } else { 0.0 };
            let soft = log_st[j].exp() - log_tt[j].exp();
            alpha * hard + (1.0 - alpha) * t * soft
        })
        .collect();
    Ok((loss, grad))
}

/// Plain cross-entropy (`alpha = 1`).
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    -log_softmax(logits, 1.0)[label]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            adam: AdamConfig {
                weight_decay: 0.0,
                ..AdamConfig::default()
            },
            seed: 0,
        }
    }
}

/// Minibatch Adam over `x` (one sample per column). With a teacher the loss
/// is [`distill_loss`]; without one, cross-entropy. Returns the mean loss of
/// the last epoch.
pub fn fit(
    net: &mut DenseNet,
    x: &DMatrix<f64>,
    labels: &[usize],
    teacher: Option<(&DenseNet, DistillParams)>,
    config: &FitConfig,
) -> Result<f64> {
    if x.ncols() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "training labels",
            expected: x.ncols(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if config.batch_size == 0 {
        return Err(invalid("batch_size", "must be positive"));
    }
    let distill = match teacher {
        Some((_, p)) => p,
        None => DistillParams {
            alpha: 1.0,
            temperature: 1.0,
        },
    };
    distill.validate()?;
    // teacher logits never change during a fit
    let teacher_logits = match teacher {
        Some((t, _)) => Some(t.forward(x)?),
        None => None,
    };
    let mut state = AdamState::new(net);
    let mut grads = net.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let classes = net.classes();
    let mut last_epoch = 0.0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select_columns(batch);
            let outs = net.forward_all(&xb)?;
            let logits = outs.last().expect("non-empty");
            let mut dlogits = DMatrix::zeros(classes, batch.len());
            let scale = 1.0 / batch.len() as f64;
            for (c, &i) in batch.iter().enumerate() {
                let s: Vec<f64> = logits.column(c).iter().copied().collect();
                let (loss, g) = match &teacher_logits {
                    Some(tl) => {
                        let t: Vec<f64> = tl.column(i).iter().copied().collect();
                        distill_loss(&s, &t, labels[i], distill)?
                    }
                    None => distill_loss(&s, &s, labels[i], distill)?,
                };
                total += loss;
                for (j, v) in g.into_iter().enumerate() {
                    dlogits[(j, c)] = v * scale;
                }
            }
            grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            net.backward(&xb, &outs, dlogits, &mut grads);
            adam_step(net, &grads, &mut state, &config.adam)?;
        }
        last_epoch = total / labels.len() as f64;
        if !last_epoch.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
    }
    Ok(last_epoch)
}
