//! Recurrent anomaly head over descriptor series.

pub mod cell;
pub mod checkpoint;
pub mod metrics;
pub mod params;
pub mod train;

pub use cell::{
    backward, backward_into, bce_loss, cell_step, head_forward, output_probability, project,
    sigmoid, CellState, LossReduction, PROB_CLAMP,
};
pub use metrics::{auroc, gate, GateDecision};
pub use params::{CellKind, Gate, HeadParams};
pub use train::{
    stratified_split, train, EpochMetrics, HeadStream, LabeledSeries, Standardizer, TrainConfig,
    TrainOutcome, TrainedHead,
};
