//! Random-matrix reference laws: Marchenko–Pastur, Wigner semicircle,
//! Tracy–Widom edge statistics and the BBP spike threshold.

mod marchenko_pastur;
mod quadrature;
mod spectrum;
mod tracy_widom;
mod wigner;

pub use marchenko_pastur::{
    bbp_threshold, estimate_sigma2_mean, estimate_sigma2_quantile, fit_mp, fit_sigma2, mp_cdf,
    mp_density, mp_quantile, mp_support, spike_location, FitObjective, MpDistribution, MpParams,
    DEFAULT_FIT_BINS,
};
pub(crate) use marchenko_pastur::{histogram_counts, interpolated_quantile};
pub use spectrum::{EigenSpectrum, NEGATIVE_CLAMP_TOLERANCE};
pub use tracy_widom::{
    default_grid, simulate_edge_statistics, tw_standardize, tw_tail_probability, TwStandardization,
    TwTable,
};
pub use wigner::wigner_density;
