//! Posterior chain storage and the canonical flattening of a parameter
//! state into named scalar columns (the draw-file layout).

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterState, SplineId, VarianceModel};
use crate::waic::LoglikMatrix;
use nalgebra::DMatrix;

/// Acceptance bookkeeping for one update block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub name: String,
    pub proposals: u64,
    pub accepted: u64,
    pub final_scale: f64,
}

impl BlockStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Thinned post-burn-in draws plus the per-subject pointwise log-likelihood
/// matrix and sampler diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub spec: ModelSpec,
    pub draws: Vec<ParameterState>,
    pub pointwise: LoglikMatrix,
    pub blocks: Vec<BlockStats>,
    /// Dispersion/hazard exponent clamp events observed while sampling.
    pub clamp_events: u64,
    /// Proposals rejected because their likelihood failed to evaluate.
    pub numeric_rejections: u64,
}

impl PosteriorChain {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.pointwise.n_subjects()
    }

    pub fn param_names(&self) -> Vec<String> {
        param_names(&self.spec, self.n_subjects())
    }

    /// Flatten every draw; returns the column names and one row per draw.
    pub fn flattened_rows(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let names = self.param_names();
        let rows = self
            .draws
            .iter()
            .map(|d| flatten_state(d, &self.spec))
            .collect();
        (names, rows)
    }

    /// The series of one named scalar parameter across draws.
    pub fn param_series(&self, name: &str) -> Result<Vec<f64>> {
        let names = self.param_names();
        let idx = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown parameter {name}")))?;
        Ok(self
            .draws
            .iter()
            .map(|d| flatten_state(d, &self.spec)[idx])
            .collect())
    }
}

/// Stable column names for the draw file, given a spec and subject count.
pub fn param_names(spec: &ModelSpec, n: usize) -> Vec<String> {
    let p = spec.random_effects_dim();
    let mut names = Vec::new();
    for k in 0..5 {
        names.push(format!("beta1_{k}"));
    }
    if spec.variance_model == VarianceModel::CovariateDispersion {
        for k in 1..=3 {
            names.push(format!("beta2_{k}"));
        }
    }
    for k in 1..=3 {
        names.push(format!("beta3_{k}"));
    }
    for i in 1..=n {
        for k in 1..=p {
            names.push(format!("b_{i}_{k}"));
        }
    }
    for j in 1..=p {
        for k in j..=p {
            names.push(format!("sigma_inv_{j}_{k}"));
        }
    }
    if spec.variance_model == VarianceModel::Exchangeable {
        for i in 1..=n {
            names.push(format!("log_sigma_{i}"));
        }
    } else {
        names.push("log_sigma0".to_string());
    }
    if matches!(
        spec.priors.sigma0_prior,
        crate::model::Sigma0Prior::HalfCauchy { .. }
    ) {
        names.push("varpi".to_string());
    }
    for id in SplineId::ALL {
        if spec.has_spline(id) {
            let q = spec.spline_config(id).num_basis();
            for qi in 1..=q {
                names.push(format!("gamma{}_{qi}", id.index()));
            }
            names.push(format!("tau2_{}", id.index()));
        }
    }
    if let Some(k) = (spec.baseline == crate::model::Baseline::Piecewise)
        .then(|| spec.piecewise_k())
    {
        for ki in 1..=k {
            names.push(format!("lambda_{ki}"));
        }
    }
    if spec.baseline == crate::model::Baseline::Weibull {
        names.push("rho".to_string());
    }
    if spec.linking == crate::model::Linking::ConstantTraditional {
        names.push("g1".to_string());
        names.push("g2".to_string());
    }
    names
}

/// Flatten a state into the column order of [`param_names`].
pub fn flatten_state(state: &ParameterState, spec: &ModelSpec) -> Vec<f64> {
    let p = spec.random_effects_dim();
    let mut out = Vec::new();
    out.extend_from_slice(&state.beta1);
    if let Some(b2) = &state.beta2 {
        out.extend_from_slice(b2);
    }
    out.extend_from_slice(&state.beta3);
    for row in &state.b {
        out.extend_from_slice(row);
    }
    for j in 0..p {
        for k in j..p {
            out.push(state.sigma_inv[(j, k)]);
        }
    }
    if spec.variance_model == VarianceModel::Exchangeable {
        out.extend_from_slice(state.log_sigma.as_ref().expect("consistent state"));
    } else {
        out.push(state.log_sigma0.expect("consistent state"));
    }
    if matches!(
        spec.priors.sigma0_prior,
        crate::model::Sigma0Prior::HalfCauchy { .. }
    ) {
        out.push(state.half_cauchy_scale.expect("consistent state"));
    }
    for id in SplineId::ALL {
        if spec.has_spline(id) {
            out.extend_from_slice(state.gamma[id.index()].as_ref().expect("consistent state"));
            out.push(state.tau2[id.index()].expect("consistent state"));
        }
    }
    if let Some(lambda) = &state.lambda {
        out.extend_from_slice(lambda);
    }
    if let Some(rho) = state.rho {
        out.push(rho);
    }
    if let Some(g1) = state.g1_const {
        out.push(g1);
        out.push(state.g2_const.expect("consistent state"));
    }
    out
}

/// Rebuild a state from a flattened row (inverse of [`flatten_state`]).
pub fn unflatten_state(values: &[f64], spec: &ModelSpec, n: usize) -> Result<ParameterState> {
    let expected = param_names(spec, n).len();
    if values.len() != expected {
        return Err(Error::invalid(format!(
            "flattened state has {} values, spec needs {expected}",
            values.len()
        )));
    }
    let p = spec.random_effects_dim();
    let mut pos = 0usize;
    let mut take = |k: usize| {
        let s = &values[pos..pos + k];
        pos += k;
        s.to_vec()
    };
    let beta1_v = take(5);
    let beta1 = [beta1_v[0], beta1_v[1], beta1_v[2], beta1_v[3], beta1_v[4]];
    let beta2 = if spec.variance_model == VarianceModel::CovariateDispersion {
        let v = take(3);
        Some([v[0], v[1], v[2]])
    } else {
        None
    };
    let beta3_v = take(3);
    let beta3 = [beta3_v[0], beta3_v[1], beta3_v[2]];
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        b.push(take(p));
    }
    let mut sigma_inv = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let v = take(1)[0];
            sigma_inv[(j, k)] = v;
            sigma_inv[(k, j)] = v;
        }
    }
    let (log_sigma0, log_sigma) = if spec.variance_model == VarianceModel::Exchangeable {
        (None, Some(take(n)))
    } else {
        (Some(take(1)[0]), None)
    };
    let half_cauchy_scale = if matches!(
        spec.priors.sigma0_prior,
        crate::model::Sigma0Prior::HalfCauchy { .. }
    ) {
        Some(take(1)[0])
    } else {
        None
    };
    let mut gamma: [Option<Vec<f64>>; 4] = [None, None, None, None];
    let mut tau2 = [None, None, None, None];
    for id in SplineId::ALL {
        if spec.has_spline(id) {
            let q = spec.spline_config(id).num_basis();
            gamma[id.index()] = Some(take(q));
            tau2[id.index()] = Some(take(1)[0]);
        }
    }
    let lambda = (spec.baseline == crate::model::Baseline::Piecewise)
        .then(|| take(spec.piecewise_k()));
    let rho = (spec.baseline == crate::model::Baseline::Weibull).then(|| take(1)[0]);
    let (g1_const, g2_const) = if spec.linking == crate::model::Linking::ConstantTraditional {
        (Some(take(1)[0]), Some(take(1)[0]))
    } else {
        (None, None)
    };
    let state = ParameterState {
        beta1,
        beta2,
        beta3,
        b,
        sigma_inv,
        log_sigma0,
        log_sigma,
        half_cauchy_scale,
        gamma,
        tau2,
        lambda,
        rho,
        g1_const,
        g2_const,
    };
    state.check_consistent(spec, n)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::enumerate_models;

    #[test]
    fn flatten_round_trips_for_every_model() {
        let n = 4;
        for spec in enumerate_models() {
            let mut state = ParameterState::zeros(&spec, n);
            // fill with distinguishable values
            let (names, _) = (param_names(&spec, n), ());
            state.beta1 = [0.1, 0.2, 0.3, 0.4, 0.5];
            state.beta3 = [1.1, 1.2, 1.3];
            for (i, row) in state.b.iter_mut().enumerate() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = (i * 10 + k) as f64 * 0.01 + 0.001;
                }
            }
            let flat = flatten_state(&state, &spec);
            assert_eq!(flat.len(), names.len(), "{}", spec.label());
            let back = unflatten_state(&flat, &spec, n).unwrap();
            assert_eq!(state, back, "{}", spec.label());
        }
    }

    #[test]
    fn names_are_unique_and_stable() {
        let spec = ModelSpec::selected();
        let names = param_names(&spec, 3);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(names.contains(&"beta1_0".to_string()));
        assert!(names.contains(&"log_sigma_3".to_string()));
        assert!(names.contains(&"gamma0_23".to_string()));
        assert!(names.contains(&"tau2_3".to_string()));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let spec = ModelSpec::selected();
        assert!(unflatten_state(&[0.0; 3], &spec, 2).is_err());
    }
}
