//! Hazard-side model: the linking predictor, the three baseline hazards,
//! the hazard ratio and the per-subject survival log-likelihood.
//!
//! The Weibull and piecewise likelihoods evaluate the linking predictor at
//! the observed time only, exactly as the likelihood contributions are
//! written; the P-spline likelihood integrates the full time-varying
//! log-hazard with the 15-point Gauss-Kronrod rule.

use crate::error::{Error, Result};
use crate::longitudinal::residual_variance_counted;
use crate::model::{Baseline, Linking, ModelSpec, ParameterState, SplineId, Subject};
use crate::quadrature::Gk15Rule;
use crate::spline::{LocalBasis, SplineBasis};

/// Bound on the integrated log-hazard exponent; values beyond it are
/// clamped and counted, mirroring the longitudinal dispersion guard.
pub const HAZARD_EXPONENT_BOUND: f64 = 50.0;

/// The spline bases a spec needs on the survival side.
#[derive(Debug, Clone)]
pub(crate) struct SurvBases {
    pub link: Option<SplineBasis>,
    pub baseline: Option<SplineBasis>,
}

impl SurvBases {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let link = if spec.linking.time_varying() {
            Some(spec.link_spline.build()?)
        } else {
            None
        };
        let baseline = if spec.baseline == Baseline::Pspline {
            Some(spec.baseline_spline.build()?)
        } else {
            None
        };
        Ok(SurvBases { link, baseline })
    }
}

/// Basis values at the observed time and at the quadrature nodes for one
/// subject; all of it depends only on the data, so it is computed once.
#[derive(Debug, Clone)]
pub(crate) struct SurvGeometry {
    pub t: f64,
    pub delta: bool,
    pub link_at_t: Option<LocalBasis>,
    pub base_at_t: Option<LocalBasis>,
    /// For the P-spline baseline: (link, baseline) basis values and the
    /// half-width of the transformed integration interval.
    pub quad_link: Option<[LocalBasis; 15]>,
    pub quad_base: Option<[LocalBasis; 15]>,
    pub half_width: f64,
    /// Piecewise: index of the interval containing t and the exposure
    /// durations in intervals 0..=index.
    pub pw_interval: Option<usize>,
    pub pw_durations: Option<Vec<f64>>,
}

/// Index of the piecewise interval containing `t`: the largest k with
/// a_k <= t, clamped to the final interval when t equals the last finite
/// cut point.
pub(crate) fn piecewise_interval(grid: &[f64], t: f64) -> Result<usize> {
    if t < grid[0] {
        return Err(Error::domain(format!(
            "time {t} below the piecewise grid start {}",
            grid[0]
        )));
    }
    let k_count = grid.len() - 1;
    let last = grid[k_count];
    if t >= last {
        if t == last && last.is_finite() {
            // boundary case: the observation closes the final interval
            return Ok(k_count - 1);
        }
        return Err(Error::invalid(format!(
            "time {t} beyond the last piecewise cut point {last}"
        )));
    }
    // grid is strictly increasing; linear scan is fine for K ~ 20
    let mut k = 0;
    while k + 1 < grid.len() && grid[k + 1] <= t {
        k += 1;
    }
    Ok(k)
}

impl SurvGeometry {
    pub fn build(
        spec: &ModelSpec,
        bases: &SurvBases,
        subject: &Subject,
        rule: &Gk15Rule,
    ) -> Result<Self> {
        let t = subject.event_time();
        let link_at_t = match &bases.link {
            Some(b) => Some(b.eval_local(t).map_err(|e| {
                Error::domain(format!("subject {}: {e}", subject.id()))
            })?),
            None => None,
        };
        let base_at_t = match &bases.baseline {
            Some(b) => Some(b.eval_local(t).map_err(|e| {
                Error::domain(format!("subject {}: {e}", subject.id()))
            })?),
            None => None,
        };
        let half_width = 0.5 * t;
        let (quad_link, quad_base) = if spec.baseline == Baseline::Pspline {
            let base = bases.baseline.as_ref().expect("pspline basis");
            let mut qb = [LocalBasis {
                offset: 0,
                values: [0.0; 4],
            }; 15];
            let mut ql = qb;
            for (j, node) in rule.nodes.iter().enumerate() {
                let u = half_width * node + half_width;
                // nodes lie strictly inside (0, t); clamp fp spill at 0
                let u = u.max(0.0);
                qb[j] = base.eval_local(u)?;
                if let Some(lb) = &bases.link {
                    ql[j] = lb.eval_local(u)?;
                }
            }
            (
                bases.link.as_ref().map(|_| ql),
                Some(qb),
            )
        } else {
            (None, None)
        };
        let (pw_interval, pw_durations) = if spec.baseline == Baseline::Piecewise {
            let grid = &spec.piecewise_grid;
            let k = piecewise_interval(grid, t)?;
            let mut durations = Vec::with_capacity(k + 1);
            for j in 0..k {
                durations.push(grid[j + 1] - grid[j]);
            }
            durations.push(t - grid[k]);
            (Some(k), Some(durations))
        } else {
            (None, None)
        };
        Ok(SurvGeometry {
            t,
            delta: subject.event(),
            link_at_t,
            base_at_t,
            quad_link,
            quad_base,
            half_width,
            pw_interval,
            pw_durations,
        })
    }
}

fn dot_local(local: &LocalBasis, gamma: &[f64]) -> f64 {
    local
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * gamma[local.offset + k])
        .sum()
}

/// The subject quantities multiplied by g1, g2 and (optionally) g3.
pub(crate) fn link_loadings(
    spec: &ModelSpec,
    state: &ParameterState,
    subject: &Subject,
    subject_index: usize,
    clamps: &mut u64,
) -> Result<(f64, f64, Option<f64>)> {
    let b = &state.b[subject_index];
    let third = match spec.linking {
        Linking::SharedB2 => Some(
            b.get(2)
                .copied()
                .ok_or_else(|| Error::invalid("SHARED_B2 needs a dispersion effect b2i"))?,
        ),
        Linking::SharedSigma => Some(
            residual_variance_counted(spec, state, subject, subject_index, clamps)?.sqrt(),
        ),
        Linking::SlopesOnly | Linking::ConstantTraditional => None,
    };
    Ok((b[0], b[1], third))
}

fn beta3_term(state: &ParameterState, subject: &Subject) -> f64 {
    let x = subject.covariates();
    state.beta3[0] * x[0] + state.beta3[1] * x[1] + state.beta3[2] * x[2]
}

/// varrho_i(t) from precomputed basis values at one point.
pub(crate) fn varrho_at(
    spec: &ModelSpec,
    state: &ParameterState,
    subject: &Subject,
    loadings: (f64, f64, Option<f64>),
    link_local: Option<&LocalBasis>,
) -> Result<f64> {
    let (b1, b2, third) = loadings;
    let mut v = beta3_term(state, subject);
    match spec.linking {
        Linking::ConstantTraditional => {
            let g1 = state
                .g1_const
                .ok_or_else(|| Error::invalid("state lacks g1_const"))?;
            let g2 = state
                .g2_const
                .ok_or_else(|| Error::invalid("state lacks g2_const"))?;
            v += g1 * b1 + g2 * b2;
        }
        _ => {
            let local = link_local.ok_or_else(|| Error::invalid("missing link basis values"))?;
            let g1 = state
                .gamma_ref(SplineId::G1)
                .ok_or_else(|| Error::invalid("state lacks gamma1"))?;
            let g2 = state
                .gamma_ref(SplineId::G2)
                .ok_or_else(|| Error::invalid("state lacks gamma2"))?;
            v += dot_local(local, g1) * b1 + dot_local(local, g2) * b2;
            if spec.linking.has_g3() {
                let g3 = state
                    .gamma_ref(SplineId::G3)
                    .ok_or_else(|| Error::invalid("state lacks gamma3"))?;
                let loading = third.ok_or_else(|| Error::invalid("missing g3 loading"))?;
                v += dot_local(local, g3) * loading;
            }
        }
    }
    if !v.is_finite() {
        return Err(Error::numeric(format!(
            "linking predictor non-finite for subject {}",
            subject.id()
        )));
    }
    Ok(v)
}

/// The linking predictor varrho_i(t): baseline survival covariates plus the
/// shared longitudinal quantities weighted by the (possibly time-varying)
/// link coefficients.
pub fn linking_predictor(
    state: &ParameterState,
    spec: &ModelSpec,
    subject: &Subject,
    subject_index: usize,
    t: f64,
) -> Result<f64> {
    let mut clamps = 0;
    let loadings = link_loadings(spec, state, subject, subject_index, &mut clamps)?;
    let local = if spec.linking.time_varying() {
        let basis = spec.link_spline.build()?;
        Some(basis.eval_local(t)?)
    } else {
        None
    };
    varrho_at(spec, state, subject, loadings, local.as_ref())
}

/// log h_0(t) for the spec's baseline family.
pub fn log_baseline_hazard(state: &ParameterState, spec: &ModelSpec, t: f64) -> Result<f64> {
    match spec.baseline {
        Baseline::Weibull => {
            let rho = state.rho.ok_or_else(|| Error::invalid("state lacks rho"))?;
            if t < 0.0 || (t == 0.0 && rho != 1.0) {
                return Err(Error::domain(format!(
                    "Weibull baseline undefined at t={t} with rho={rho}"
                )));
            }
            let mut v = rho.ln();
            if rho != 1.0 {
                v += (rho - 1.0) * t.ln();
            }
            Ok(v)
        }
        Baseline::Pspline => {
            let basis = spec.baseline_spline.build()?;
            let gamma = state
                .gamma_ref(SplineId::G0)
                .ok_or_else(|| Error::invalid("state lacks gamma0"))?;
            basis.eval_spline(gamma, t)
        }
        Baseline::Piecewise => {
            let lambda = state
                .lambda
                .as_ref()
                .ok_or_else(|| Error::invalid("state lacks lambda"))?;
            let k = piecewise_interval(&spec.piecewise_grid, t)?;
            Ok(lambda[k].ln())
        }
    }
}

/// Weibull likelihood core given varrho at the observed time.
fn weibull_core(t: f64, delta: bool, rho: f64, varrho_t: f64) -> Result<f64> {
    if t < 0.0 || (t <= 0.0 && rho != 1.0) {
        return Err(Error::domain(format!(
            "Weibull survival needs T > 0 when rho != 1, got T={t}, rho={rho}"
        )));
    }
    let mut ll = -varrho_t.exp() * t.powf(rho);
    if delta {
        ll += rho.ln() + varrho_t;
        if rho != 1.0 {
            ll += (rho - 1.0) * t.ln();
        }
    }
    Ok(ll)
}

fn piecewise_core(
    delta: bool,
    lambda: &[f64],
    interval: usize,
    durations: &[f64],
    varrho_t: f64,
) -> f64 {
    let mut cum = 0.0;
    for (k, d) in durations.iter().enumerate() {
        cum += lambda[k] * d;
    }
    let mut ll = -cum * varrho_t.exp();
    if delta {
        ll += lambda[interval].ln() + varrho_t;
    }
    ll
}

/// Survival log-likelihood from precomputed geometry; the single code path
/// shared by the public functions and the sampler.
pub(crate) fn surv_loglik_geom(
    geom: &SurvGeometry,
    state: &ParameterState,
    spec: &ModelSpec,
    subject: &Subject,
    subject_index: usize,
    rule: &Gk15Rule,
    clamps: &mut u64,
) -> Result<f64> {
    let loadings = link_loadings(spec, state, subject, subject_index, clamps)?;
    match spec.baseline {
        Baseline::Weibull => {
            let rho = state.rho.ok_or_else(|| Error::invalid("state lacks rho"))?;
            let vr = varrho_at(spec, state, subject, loadings, geom.link_at_t.as_ref())?;
            weibull_core(geom.t, geom.delta, rho, vr)
        }
        Baseline::Piecewise => {
            let lambda = state
                .lambda
                .as_ref()
                .ok_or_else(|| Error::invalid("state lacks lambda"))?;
            let vr = varrho_at(spec, state, subject, loadings, geom.link_at_t.as_ref())?;
            Ok(piecewise_core(
                geom.delta,
                lambda,
                geom.pw_interval.expect("piecewise geometry"),
                geom.pw_durations.as_ref().expect("piecewise geometry"),
                vr,
            ))
        }
        Baseline::Pspline => {
            let gamma0 = state
                .gamma_ref(SplineId::G0)
                .ok_or_else(|| Error::invalid("state lacks gamma0"))?;
            let base_t = geom
                .base_at_t
                .as_ref()
                .ok_or_else(|| Error::invalid("missing baseline basis values"))?;
            let mut ll = 0.0;
            if geom.delta {
                let vr_t = varrho_at(spec, state, subject, loadings, geom.link_at_t.as_ref())?;
                ll += dot_local(base_t, gamma0) + vr_t;
            }
            // cumulative hazard over [0, T] by the 15-point rule
            let qb = geom.quad_base.as_ref().expect("pspline geometry");
            let mut acc = 0.0;
            for j in 0..15 {
                let link_local = geom.quad_link.as_ref().map(|q| &q[j]);
                let vr = varrho_at(spec, state, subject, loadings, link_local)?;
                let mut expo = dot_local(&qb[j], gamma0) + vr;
                if !expo.is_finite() {
                    return Err(Error::numeric(format!(
                        "hazard exponent non-finite at quadrature node {j} for subject {}",
                        subject.id()
                    )));
                }
                if expo.abs() > HAZARD_EXPONENT_BOUND {
                    *clamps += 1;
                    expo = expo.clamp(-HAZARD_EXPONENT_BOUND, HAZARD_EXPONENT_BOUND);
                }
                acc += rule.weights[j] * expo.exp();
            }
            ll -= geom.half_width * acc;
            if !ll.is_finite() {
                return Err(Error::numeric(format!(
                    "survival log-likelihood non-finite for subject {}",
                    subject.id()
                )));
            }
            Ok(ll)
        }
    }
}

fn surv_loglik_baseline(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
    expected: Baseline,
) -> Result<f64> {
    if spec.baseline != expected {
        return Err(Error::invalid(format!(
            "spec baseline is {}, not {}",
            spec.baseline.name(),
            expected.name()
        )));
    }
    let rule = Gk15Rule::standard();
    let bases = SurvBases::new(spec)?;
    let geom = SurvGeometry::build(spec, &bases, subject, &rule)?;
    let mut clamps = 0;
    surv_loglik_geom(&geom, state, spec, subject, subject_index, &rule, &mut clamps)
}

/// Weibull survival log-likelihood, with the linking predictor evaluated at
/// the observed time.
pub fn surv_loglik_weibull(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
) -> Result<f64> {
    surv_loglik_baseline(subject, state, spec, subject_index, Baseline::Weibull)
}

/// P-spline survival log-likelihood with the Gauss-Kronrod cumulative hazard.
pub fn surv_loglik_pspline(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
    rule: &Gk15Rule,
) -> Result<f64> {
    if spec.baseline != Baseline::Pspline {
        return Err(Error::invalid(format!(
            "spec baseline is {}, not PSPLINE",
            spec.baseline.name()
        )));
    }
    let bases = SurvBases::new(spec)?;
    let geom = SurvGeometry::build(spec, &bases, subject, rule)?;
    let mut clamps = 0;
    surv_loglik_geom(&geom, state, spec, subject, subject_index, rule, &mut clamps)
}

/// Piecewise-constant survival log-likelihood.
pub fn surv_loglik_piecewise(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
) -> Result<f64> {
    surv_loglik_baseline(subject, state, spec, subject_index, Baseline::Piecewise)
}

/// Survival log-likelihood for whatever baseline the spec uses.
pub fn surv_loglik(
    subject: &Subject,
    state: &ParameterState,
    spec: &ModelSpec,
    subject_index: usize,
) -> Result<f64> {
    surv_loglik_baseline(subject, state, spec, subject_index, spec.baseline)
}

/// Hazard ratio exp{g3(t)} per unit difference in the linked quantity.
pub fn hazard_ratio(state: &ParameterState, spec: &ModelSpec, t: f64) -> Result<f64> {
    if !(spec.linking.time_varying() && spec.linking.has_g3()) {
        return Err(Error::invalid(format!(
            "linking {} has no g3 coefficient",
            spec.linking.name()
        )));
    }
    let gamma3 = state
        .gamma_ref(SplineId::G3)
        .ok_or_else(|| Error::invalid("state lacks gamma3"))?;
    let basis = spec.link_spline.build()?;
    Ok(basis.eval_spline(gamma3, t)?.exp())
}
