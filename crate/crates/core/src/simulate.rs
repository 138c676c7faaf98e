//! Synthetic-cohort generator: draws covariates, random effects, repeated
//! measures and event times (by inverting the cumulative hazard) from any
//! admissible model spec with known true parameters.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::longitudinal::{mean_trajectory, residual_variance};
use crate::model::{
    Dataset, ModelSpec, ParameterState, SplineId, Subject, VarianceModel,
};
use crate::quadrature::Gk15Rule;
use crate::survival::{linking_predictor, log_baseline_hazard};

/// Cohort layout and generation settings.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n_subjects: usize,
    /// Planned exam times; actual times get per-subject jitter.
    pub exam_schedule: Vec<f64>,
    /// Standard deviation of the exam-time jitter (0 for the exact grid).
    pub exam_jitter_sd: f64,
    /// Administrative censoring time.
    pub censor_time: f64,
    /// Bernoulli prevalences of (sex, age, prevoi); defaults mirror the
    /// cohort composition of the applied analysis.
    pub covariate_prevalence: [f64; 3],
    /// Mean and standard deviation of log sigma_i under EXCHANGEABLE truth.
    pub exchangeable_log_sigma: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_subjects: 100,
            exam_schedule: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
            exam_jitter_sd: 0.0,
            censor_time: 5.0,
            covariate_prevalence: [0.596, 0.12, 0.396],
            exchangeable_log_sigma: None,
            seed: 1,
        }
    }
}

/// Built-in true parameters for demonstration cohorts: trajectory and
/// hazard coefficients of plausible magnitude, a moderate random-effects
/// covariance, and gently informative link functions.
pub fn default_truth(spec: &ModelSpec) -> ParameterState {
    let p = spec.random_effects_dim();
    let mut state = ParameterState::zeros(spec, 0);
    state.beta1 = [17.0, 1.7, -0.7, -1.3, -1.6];
    if state.beta2.is_some() {
        state.beta2 = Some([0.2, 0.2, 0.3]);
    }
    state.beta3 = [0.3, 0.5, 0.5];
    let mut sigma = nalgebra::DMatrix::zeros(p, p);
    sigma[(0, 0)] = 16.0;
    sigma[(0, 1)] = -2.0;
    sigma[(1, 0)] = -2.0;
    sigma[(1, 1)] = 4.0;
    if p == 3 {
        sigma[(2, 2)] = 0.5;
    }
    state.sigma_inv = sigma.try_inverse().expect("positive definite");
    if let Some(v) = state.log_sigma0.as_mut() {
        *v = 2.5_f64.ln();
    }
    for id in SplineId::ALL {
        if let Some(g) = state.gamma[id.index()].as_mut() {
            let c = match id {
                SplineId::G0 => 0.15_f64.ln(),
                SplineId::G1 => -0.2,
                SplineId::G2 => -0.4,
                SplineId::G3 => 0.25,
            };
            g.iter_mut().for_each(|x| *x = c);
        }
    }
    if let Some(l) = state.lambda.as_mut() {
        l.iter_mut().for_each(|x| *x = 0.15);
    }
    if state.g1_const.is_some() {
        state.g1_const = Some(-0.2);
        state.g2_const = Some(-0.4);
    }
    state
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent per-subject stream derived from the cohort seed.
fn subject_rng(seed: u64, subject: usize) -> ChaCha12Rng {
    let mut s = seed.wrapping_add((subject as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
    let a = splitmix64(&mut s);
    let b = splitmix64(&mut s);
    ChaCha12Rng::seed_from_u64(a ^ b.rotate_left(17))
}

/// Cumulative hazard H(t) for one subject, integrating the generative
/// hazard h0(u) exp{varrho(u)} with one Gauss-Kronrod panel per year.
pub fn cumulative_hazard(
    state: &ParameterState,
    spec: &ModelSpec,
    subject: &Subject,
    subject_index: usize,
    t: f64,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let rule = Gk15Rule::standard();
    let panels = t.ceil().max(1.0) as usize;
    let mut failure: Option<Error> = None;
    let value = rule.integrate_panels(
        |u| {
            let h = log_baseline_hazard(state, spec, u.max(1e-12))
                .and_then(|g0| {
                    linking_predictor(state, spec, subject, subject_index, u).map(|vr| g0 + vr)
                });
            match h {
                Ok(v) => v.exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        t,
        panels,
    );
    match (value, failure) {
        (_, Some(e)) => Err(e),
        (Ok(v), None) => Ok(v),
        (Err(e), None) => Err(e),
    }
}

/// Smallest T with H(T) = target, found by bisection on [0, t_max] to
/// absolute tolerance `tol`; `None` when the cumulative hazard never
/// reaches the target (the subject is censored).
pub fn invert_survival_time(
    state: &ParameterState,
    spec: &ModelSpec,
    subject: &Subject,
    subject_index: usize,
    target: f64,
    t_max: f64,
    tol: f64,
) -> Result<Option<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target must be positive, got {target}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::invalid("t_max must be positive and finite"));
    }
    if cumulative_hazard(state, spec, subject, subject_index, t_max)? < target {
        return Ok(None);
    }
    let mut lo = 0.0_f64;
    let mut hi = t_max;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if cumulative_hazard(state, spec, subject, subject_index, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Generate a cohort. Returns the dataset together with the completed true
/// state (random effects and per-subject variances filled in), for
/// recovery scoring.
pub fn simulate_dataset(
    true_state: &ParameterState,
    spec: &ModelSpec,
    config: &SimulationConfig,
) -> Result<(Dataset, ParameterState)> {
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(Error::invalid(format!(
            "model spec is not admissible: {}",
            violations.join("; ")
        )));
    }
    if config.n_subjects == 0 {
        return Err(Error::invalid("cohort needs at least one subject"));
    }
    if config.exam_schedule.is_empty() {
        return Err(Error::invalid("exam schedule must not be empty"));
    }
    if config
        .exam_schedule
        .iter()
        .any(|t| !t.is_finite() || *t < 0.0 || *t > config.censor_time)
    {
        return Err(Error::invalid(
            "exam schedule must lie within [0, censor_time]",
        ));
    }
    if spec.variance_model == VarianceModel::Exchangeable
        && config.exchangeable_log_sigma.is_none()
    {
        return Err(Error::invalid(
            "EXCHANGEABLE truth needs exchangeable_log_sigma = (mean, sd)",
        ));
    }
    let p = spec.random_effects_dim();
    let n = config.n_subjects;

    // Sigma = sigma_inv^{-1}, factored once for the random-effect draws
    let sigma = true_state
        .sigma_inv
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("true sigma_inv is not invertible"))?;
    let chol = nalgebra::Cholesky::new(sigma)
        .ok_or_else(|| Error::invalid("true sigma_inv is not positive definite"))?;
    let l = chol.l();

    let mut state = true_state.clone();
    state.b = vec![vec![0.0; p]; n];
    if spec.variance_model == VarianceModel::Exchangeable {
        state.log_sigma = Some(vec![0.0; n]);
    }

    let mut subjects = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = subject_rng(config.seed, i);
        let sex = (rng.random::<f64>() < config.covariate_prevalence[0]) as u8;
        let age = (rng.random::<f64>() < config.covariate_prevalence[1]) as u8;
        let prevoi = (rng.random::<f64>() < config.covariate_prevalence[2]) as u8;

        // b_i ~ N(0, Sigma)
        let z = nalgebra::DVector::from_fn(p, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let b = &l * z;
        for k in 0..p {
            state.b[i][k] = b[k];
        }

        if let Some((mu, sd)) = config.exchangeable_log_sigma {
            let z: f64 = StandardNormal.sample(&mut rng);
            state.log_sigma.as_mut().expect("exchangeable state")[i] = mu + sd * z;
        }

        // exam grid with jitter, clamped to the study window, strictly
        // deduplicated so the files round-trip
        let mut times: Vec<f64> = config
            .exam_schedule
            .iter()
            .map(|t| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (t + config.exam_jitter_sd * z).clamp(0.0, config.censor_time)
            })
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        times.dedup();

        // placeholder subject for the variance/linking evaluations
        let probe = Subject::new(
            format!("sim_{:05}", i + 1),
            times.clone(),
            vec![0.0; times.len()],
            config.censor_time,
            false,
            sex,
            age,
            prevoi,
        )?;
        let var = residual_variance(spec, &state, &probe, i)?;
        let sd = var.sqrt();
        let y: Vec<f64> = times
            .iter()
            .map(|t| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean_trajectory(&state.beta1, &state.b[i], &probe, *t) + sd * z
            })
            .collect();

        // event time by inverse-transform sampling of the hazard
        let u: f64 = rng.random();
        let target = (-(1.0 - u).ln()).max(f64::MIN_POSITIVE);
        let drawn = invert_survival_time(
            &state,
            spec,
            &probe,
            i,
            target,
            config.censor_time,
            1e-8,
        )?;
        let (event_time, event) = match drawn {
            Some(t) => (t, true),
            None => (config.censor_time, false),
        };

        // drop exams after the event, always keeping the first
        let mut kept_times = Vec::new();
        let mut kept_y = Vec::new();
        for (t, yv) in times.iter().zip(&y) {
            if *t <= event_time || kept_times.is_empty() {
                kept_times.push(*t);
                kept_y.push(*yv);
            }
        }
        subjects.push(Subject::new(
            format!("sim_{:05}", i + 1),
            kept_times,
            kept_y,
            event_time,
            event,
            sex,
            age,
            prevoi,
        )?);
    }
    Ok((Dataset::new(subjects)?, state))
}
