//! Bayesian joint models for longitudinal biomarker data and survival
//! times: a mixed-effects dispersion model for the repeated measures, a
//! proportional-hazards model whose link coefficients vary over time
//! through penalized B-splines, three baseline-hazard families, an
//! adaptive Metropolis-within-Gibbs sampler, WAIC model comparison and a
//! synthetic-cohort simulator.

pub mod error;
pub mod io;
pub mod longitudinal;
pub mod math;
pub mod model;
pub mod quadrature;
pub mod sampler;
pub mod simulate;
pub mod spline;
pub mod survival;
pub mod waic;

pub use error::{Error, Result};
pub use model::{
    enumerate_models, enumerate_models_from, Baseline, Dataset, Linking, ModelSpec, ParameterState, PriorConfig,
    Sigma0Prior, SplineConfig, SplineId, Subject, VarianceModel,
};
pub use sampler::{
    chain_diagnostics, log_posterior, log_prior, run_chain, run_chain_with_options, sample_prior,
    AdvancedOptions, BlockKind, PosteriorChain, SamplerConfig,
};
pub use simulate::{invert_survival_time, simulate_dataset, SimulationConfig};
pub use waic::{compute_waic, LoglikMatrix, WaicResult};
