//! Prior density terms. Every Metropolis block and the public `log_prior`
//! draw on the same functions so the sampled target and the reported prior
//! cannot drift apart.
//!
//! Densities are expressed in the parameterization the state stores: the
//! smoothing variances tau^2 and the sigma parameters (stored as log sigma)
//! carry the Jacobians of their Gamma-on-precision priors.

use nalgebra::DMatrix;

use crate::math::{ln_gamma, ln_gamma_pdf, ln_multigamma, ln_normal_pdf, LN_2PI};
use crate::model::{ModelSpec, ParameterState, Sigma0Prior, SplineId, VarianceModel};
use crate::spline::log_rw1_prior;

/// ln N(value; 0, variance), the prior of every regression coefficient.
pub(crate) fn beta_prior_term(value: f64, variance: f64) -> f64 {
    ln_normal_pdf(value, 0.0, variance)
}

/// Numerically safe ln(1 + e^x).
fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        0.0
    } else {
        x.exp().ln_1p()
    }
}

/// Prior density of one log-sigma value under the configured family.
/// For the half-Cauchy family the current mixture scale must be supplied.
///
/// The densities are evaluated analytically on the log-sigma scale so that
/// the far tails (which matter under the very diffuse Gamma(eps, eps)
/// prior) neither overflow nor underflow.
pub(crate) fn log_sigma_prior_term(
    log_sigma: f64,
    prior: &Sigma0Prior,
    varpi: Option<f64>,
) -> f64 {
    match *prior {
        Sigma0Prior::LogUniform { bound } => {
            if log_sigma.abs() > bound {
                f64::NEG_INFINITY
            } else {
                -(2.0 * bound).ln()
            }
        }
        Sigma0Prior::InvGamma { eps } => {
            // u = 1/sigma^2 ~ Gamma(eps, eps) with the 2u Jacobian folded in:
            // ln pi(v) = eps ln eps - ln G(eps) + ln 2 - 2 eps v - eps e^{-2v}
            eps * eps.ln() - ln_gamma(eps) + 2.0_f64.ln() - 2.0 * eps * log_sigma
                - eps * (-2.0 * log_sigma).exp()
        }
        Sigma0Prior::HalfCauchy { .. } => {
            // sigma ~ half-Cauchy(varpi) with the sigma Jacobian:
            // ln pi(v) = ln(2/pi) - ln w - ln(1 + e^{2(v - ln w)}) + v
            match varpi {
                Some(w) if w > 0.0 => {
                    (2.0 / std::f64::consts::PI).ln() - w.ln()
                        - ln_one_plus_exp(2.0 * (log_sigma - w.ln()))
                        + log_sigma
                }
                _ => f64::NEG_INFINITY,
            }
        }
    }
}

/// Uniform(0, scale_max) prior on the half-Cauchy mixture scale.
pub(crate) fn varpi_prior_term(varpi: f64, prior: &Sigma0Prior) -> f64 {
    match *prior {
        Sigma0Prior::HalfCauchy { scale_max } => {
            if varpi > 0.0 && varpi < scale_max {
                -scale_max.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        _ => 0.0,
    }
}

/// Prior density of tau^2 when 1/tau^2 ~ Gamma(shape, rate), with the
/// 1/tau^4 Jacobian folded in analytically.
pub(crate) fn tau2_prior_term(tau2: f64, shape: f64, rate: f64) -> f64 {
    if !(tau2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * tau2.ln() - rate / tau2
}

/// Log density of the BUGS-convention Wishart prior on a precision matrix:
/// scale matrix R (here diagonal), degrees of freedom df, mean df * R^{-1}.
pub(crate) fn wishart_logpdf_diag_scale(w: &DMatrix<f64>, r_diag: f64, df: f64) -> f64 {
    let p = w.nrows();
    let chol = match nalgebra::Cholesky::new(w.clone()) {
        Some(c) => c,
        None => return f64::NEG_INFINITY,
    };
    let ln_det_w: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let trace_rw: f64 = r_diag * w.diagonal().iter().sum::<f64>();
    let pf = p as f64;
    0.5 * df * pf * r_diag.ln() - 0.5 * df * pf * 2.0_f64.ln() - ln_multigamma(p, 0.5 * df)
        + 0.5 * (df - pf - 1.0) * ln_det_w
        - 0.5 * trace_rw
}

/// ln N_p(b; 0, Sigma) given the precision matrix and its log determinant.
pub(crate) fn mvn_logpdf_prec(b: &[f64], sigma_inv: &DMatrix<f64>, ln_det_prec: f64) -> f64 {
    let p = b.len();
    let mut quad = 0.0;
    for j in 0..p {
        for k in 0..p {
            quad += b[j] * sigma_inv[(j, k)] * b[k];
        }
    }
    -0.5 * p as f64 * LN_2PI + 0.5 * ln_det_prec - 0.5 * quad
}

pub(crate) fn ln_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Full log prior of a state under a spec, including the random-effects
/// term. Support violations yield negative infinity rather than errors.
pub fn log_prior(state: &ParameterState, spec: &ModelSpec) -> f64 {
    let pr = &spec.priors;
    let mut lp = 0.0;
    for v in state.beta1 {
        lp += beta_prior_term(v, pr.beta_variance);
    }
    if let Some(b2) = &state.beta2 {
        for v in b2 {
            lp += beta_prior_term(*v, pr.beta_variance);
        }
    }
    for v in state.beta3 {
        lp += beta_prior_term(v, pr.beta_variance);
    }
    // random effects and their Wishart-precision prior
    let ln_det = match ln_det_spd(&state.sigma_inv) {
        Some(v) => v,
        None => return f64::NEG_INFINITY,
    };
    for row in &state.b {
        lp += mvn_logpdf_prec(row, &state.sigma_inv, ln_det);
    }
    lp += wishart_logpdf_diag_scale(&state.sigma_inv, pr.wishart_scale_diag, pr.wishart_df);
    // variance parameters
    let varpi = state.half_cauchy_scale;
    if let Some(w) = varpi {
        lp += varpi_prior_term(w, &pr.sigma0_prior);
    }
    match spec.variance_model {
        VarianceModel::Exchangeable => {
            for ls in state.log_sigma.as_ref().expect("consistent state") {
                lp += log_sigma_prior_term(*ls, &pr.sigma0_prior, varpi);
            }
        }
        _ => {
            lp += log_sigma_prior_term(
                state.log_sigma0.expect("consistent state"),
                &pr.sigma0_prior,
                varpi,
            );
        }
    }
    // spline coefficients and smoothing variances
    for id in SplineId::ALL {
        if let (Some(gamma), Some(tau2)) = (&state.gamma[id.index()], state.tau2[id.index()]) {
            if !(tau2 > 0.0) {
                return f64::NEG_INFINITY;
            }
            lp += log_rw1_prior(gamma, tau2, pr.first_coef_variance)
                .unwrap_or(f64::NEG_INFINITY);
            lp += tau2_prior_term(tau2, pr.gamma_smooth.0, pr.gamma_smooth.1);
        }
    }
    if let Some(lambda) = &state.lambda {
        for l in lambda {
            lp += ln_gamma_pdf(*l, pr.gamma_lambda.0, pr.gamma_lambda.1);
        }
    }
    if let Some(rho) = state.rho {
        lp += ln_gamma_pdf(rho, pr.weibull_rho_prior.0, pr.weibull_rho_prior.1);
    }
    if let Some(g1) = state.g1_const {
        lp += beta_prior_term(g1, pr.beta_variance);
        lp += beta_prior_term(state.g2_const.expect("consistent state"), pr.beta_variance);
    }
    lp
}
