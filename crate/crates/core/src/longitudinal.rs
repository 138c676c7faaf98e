//! Longitudinal mean trajectory, the dispersion-model variants and the
//! per-subject longitudinal log-likelihood.

use crate::error::{Error, Result};
use crate::math::LN_2PI;
use crate::model::{ModelSpec, ParameterState, Subject, VarianceModel};

/// Bound on the dispersion linear predictor before exponentiation; values
/// beyond it are clamped and counted by the sampler.
pub const DISPERSION_EXPONENT_BOUND: f64 = 50.0;

/// Population mean plus subject deviation at time `t`:
/// beta_10 + beta_11 t + beta_12 sex + beta_13 age + beta_14 prevoi
/// + b_1i1 + b_1i2 t.
pub fn mean_trajectory(beta1: &[f64; 5], b1: &[f64], subject: &Subject, t: f64) -> f64 {
    let [sex, age, prevoi] = subject.covariates();
    beta1[0] + beta1[1] * t + beta1[2] * sex + beta1[3] * age + beta1[4] * prevoi + b1[0]
        + b1[1] * t
}

/// Residual variance for one subject under the spec's dispersion model,
/// counting clamp events on the dispersion exponent.
pub(crate) fn residual_variance_counted(
    spec: &ModelSpec,
    state: &ParameterState,
    subject: &Subject,
    subject_index: usize,
    clamps: &mut u64,
) -> Result<f64> {
    if subject_index >= state.n_subjects() {
        return Err(Error::invalid(format!(
            "subject index {subject_index} out of range for {} subjects",
            state.n_subjects()
        )));
    }
    let var = match spec.variance_model {
        VarianceModel::Common => {
            let ls = state
                .log_sigma0
                .ok_or_else(|| Error::invalid("state lacks log_sigma0"))?;
            (2.0 * ls).exp()
        }
        VarianceModel::Exchangeable => {
            let ls = state
                .log_sigma
                .as_ref()
                .ok_or_else(|| Error::invalid("state lacks per-subject log_sigma"))?;
            (2.0 * ls[subject_index]).exp()
        }
        VarianceModel::CovariateDispersion | VarianceModel::RandomInterceptDispersion => {
            let ls = state
                .log_sigma0
                .ok_or_else(|| Error::invalid("state lacks log_sigma0"))?;
            let b2 = state.b[subject_index]
                .get(2)
                .copied()
                .ok_or_else(|| Error::invalid("state lacks dispersion effect b2i"))?;
            let mut eta = b2;
            if spec.variance_model == VarianceModel::CovariateDispersion {
                let beta2 = state
                    .beta2
                    .ok_or_else(|| Error::invalid("state lacks beta2"))?;
                let x = subject.covariates();
                eta += beta2[0] * x[0] + beta2[1] * x[1] + beta2[2] * x[2];
            }
            if eta.abs() > DISPERSION_EXPONENT_BOUND {
                *clamps += 1;
                eta = eta.clamp(-DISPERSION_EXPONENT_BOUND, DISPERSION_EXPONENT_BOUND);
            }
            (2.0 * ls).exp() * eta.exp()
        }
    };
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::numeric(format!(
            "residual variance {var} for subject {}",
            subject.id()
        )));
    }
    Ok(var)
}

/// Residual variance sigma_i^2 for one subject.
pub fn residual_variance(
    spec: &ModelSpec,
    state: &ParameterState,
    subject: &Subject,
    subject_index: usize,
) -> Result<f64> {
    let mut clamps = 0;
    residual_variance_counted(spec, state, subject, subject_index, &mut clamps)
}

pub(crate) fn long_loglik_counted(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
    clamps: &mut u64,
) -> Result<f64> {
    let var = residual_variance_counted(spec, state, subject, subject_index, clamps)?;
    let b1 = &state.b[subject_index];
    let mut ll = 0.0;
    for (t, y) in subject.times().iter().zip(subject.y()) {
        let m = mean_trajectory(&state.beta1, b1, subject, *t);
        let d = y - m;
        ll += -0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var);
    }
    if !ll.is_finite() {
        return Err(Error::numeric(format!(
            "longitudinal log-likelihood non-finite for subject {}",
            subject.id()
        )));
    }
    Ok(ll)
}

/// Log-likelihood of the subject's repeated measures: Gaussian with mean
/// `mean_trajectory` and variance `residual_variance`.
pub fn long_loglik_subject(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
) -> Result<f64> {
    let mut clamps = 0;
    long_loglik_counted(subject, state, spec, subject_index, &mut clamps)
}
