//! Estimators: correlation functions, tails, decay and growth fits, and the
//! Laplace-domain series.

mod backend;
mod correlation;
mod laplace;
mod tail;
mod twosample;
mod variance;

pub use backend::{
    advance, integrate, BaseSampler, BilliardBackend, BilliardState, FlowBackend, OrbitBackend,
    SuspensionBackend,
};
pub use correlation::{
    correlation, correlation_birkhoff, decay_exponent_fit, CorrelationSeries, DecayFit, Obs,
    BATCHES, MIN_BUDGET,
};
pub use laplace::{laplace_series, laplace_transform, FiberObs, LaplaceEstimate, LaplaceTerm};
pub use tail::{tail_fit, tail_survival, SurvivalCounts, TailEstimate, MIN_TAIL_SAMPLES};
pub use twosample::{chi2_two_sample, grid_bin, TwoSampleTest};
pub use variance::{
    fit_through_origin, identity_prediction, variance_correlation_identity, variance_growth,
    IdentityRow, ModelFit, VarianceSeries, MIN_ENSEMBLE,
};
