//! Spectral diagnostics for neural activations.
//!
//! * [`rmt`]: Marchenko–Pastur, Wigner and Tracy–Widom reference laws and
//!   the histogram fit of the noise variance.
//! * [`features`]: the 22-slot spectral descriptor of an activation window.
//! * [`stream`]: sliding activation buffer and descriptor time series.
//! * [`head`]: recurrent (vanilla/GRU/LSTM) anomaly head trained by BPTT.
//! * [`kd`]: spectral outlier projection and self-distillation compression
//!   of dense networks.
//! * [`container`]: binary activation container and socket frames.

pub mod container;
pub mod dataset;
pub mod error;
pub mod features;
pub mod head;
pub mod kd;
pub mod linalg;
pub mod optim;
pub mod rmt;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
