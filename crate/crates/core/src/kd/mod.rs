//! Spectral-outlier compression of dense networks with self-distillation.

pub mod checkpoint;
pub mod distill;
pub mod net;
pub mod projection;
pub mod schedule;
pub mod task;

pub use crate::synth::{spiked_sample, Spike, SpikedModelSpec};
pub use distill::{cross_entropy, distill_loss, fit, log_softmax, DistillParams, FitConfig};
pub use net::{Activation, DenseLayer, DenseNet};
pub use projection::{
    causal_projection, collect_activations, insert_projection, orthonormality_error,
    select_outliers,
};
pub use schedule::{
    quantile_sweep, rmtkd_schedule, stopping_check, sweep_template, CompressionPlan,
    CompressionReport, StageRecord, StageStatus, StopDecision, StopReason, SweepPoint,
};
pub use task::{GaussianMixtureTask, Split, TaskData};

/// Trains a fresh network on the task's training split with cross-entropy.
pub fn pretrain(widths: &[usize], data: &TaskData, config: &FitConfig) -> crate::Result<DenseNet> {
    let mut net = DenseNet::new(widths, config.seed)?;
    fit(&mut net, &data.train.x, &data.train.labels, None, config)?;
    Ok(net)
}
