//! Data model: subjects and datasets, the model-specification lattice
//! (variance model x linking structure x baseline hazard), prior
//! hyperparameters and the full parameter state of a fit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spline::SplineBasis;

/// How the residual variance of the repeated measures is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceModel {
    /// sigma_i^2 = sigma_0^2 exp{beta2'x_2i + b_2i}
    CovariateDispersion,
    /// sigma_i^2 = sigma_0^2 exp{b_2i}
    RandomInterceptDispersion,
    /// One variance per subject with an exchangeable prior.
    Exchangeable,
    /// A single common variance sigma_0^2.
    Common,
}

/// Which longitudinal quantities enter the hazard and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linking {
    /// g1(t) b_1i1 + g2(t) b_1i2 + g3(t) b_2i
    SharedB2,
    /// g1(t) b_1i1 + g2(t) b_1i2 + g3(t) sigma_i
    SharedSigma,
    /// g1(t) b_1i1 + g2(t) b_1i2
    SlopesOnly,
    /// g1 b_1i1 + g2 b_1i2 with scalar, time-invariant coefficients.
    ConstantTraditional,
}

/// Baseline hazard family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Weibull,
    Pspline,
    Piecewise,
}

impl VarianceModel {
    pub fn name(&self) -> &'static str {
        match self {
            VarianceModel::CovariateDispersion => "COVARIATE_DISPERSION",
            VarianceModel::RandomInterceptDispersion => "RANDOM_INTERCEPT_DISPERSION",
            VarianceModel::Exchangeable => "EXCHANGEABLE",
            VarianceModel::Common => "COMMON",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "COVARIATE_DISPERSION" => Some(VarianceModel::CovariateDispersion),
            "RANDOM_INTERCEPT_DISPERSION" => Some(VarianceModel::RandomInterceptDispersion),
            "EXCHANGEABLE" => Some(VarianceModel::Exchangeable),
            "COMMON" => Some(VarianceModel::Common),
            _ => None,
        }
    }

    /// Whether a subject-level dispersion effect b_2i exists.
    pub fn has_b2(&self) -> bool {
        matches!(
            self,
            VarianceModel::CovariateDispersion | VarianceModel::RandomInterceptDispersion
        )
    }
}

impl Linking {
    pub fn name(&self) -> &'static str {
        match self {
            Linking::SharedB2 => "SHARED_B2",
            Linking::SharedSigma => "SHARED_SIGMA",
            Linking::SlopesOnly => "SLOPES_ONLY",
            Linking::ConstantTraditional => "CONSTANT_TRADITIONAL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SHARED_B2" => Some(Linking::SharedB2),
            "SHARED_SIGMA" => Some(Linking::SharedSigma),
            "SLOPES_ONLY" => Some(Linking::SlopesOnly),
            "CONSTANT_TRADITIONAL" => Some(Linking::ConstantTraditional),
            _ => None,
        }
    }

    /// Whether the linking predictor includes a g3 term.
    pub fn has_g3(&self) -> bool {
        matches!(self, Linking::SharedB2 | Linking::SharedSigma)
    }

    pub fn time_varying(&self) -> bool {
        !matches!(self, Linking::ConstantTraditional)
    }
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Weibull => "WEIBULL",
            Baseline::Pspline => "PSPLINE",
            Baseline::Piecewise => "PIECEWISE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "WEIBULL" => Some(Baseline::Weibull),
            "PSPLINE" => Some(Baseline::Pspline),
            "PIECEWISE" => Some(Baseline::Piecewise),
            _ => None,
        }
    }
}

/// Prior on the baseline standard deviation (and on the per-subject
/// sigma_i under the exchangeable variance model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma0Prior {
    /// log(sigma) ~ Uniform(-bound, bound); approximation to the Jeffreys prior.
    LogUniform { bound: f64 },
    /// 1/sigma^2 ~ Gamma(eps, eps) in shape-rate form.
    InvGamma { eps: f64 },
    /// sigma | scale ~ half-Cauchy(scale), scale ~ Uniform(0, scale_max).
    HalfCauchy { scale_max: f64 },
}

impl Sigma0Prior {
    pub fn name(&self) -> &'static str {
        match self {
            Sigma0Prior::LogUniform { .. } => "LOG_UNIFORM",
            Sigma0Prior::InvGamma { .. } => "INV_GAMMA",
            Sigma0Prior::HalfCauchy { .. } => "HALF_CAUCHY",
        }
    }
}

/// Domain and resolution of one spline basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub num_intervals: usize,
}

impl SplineConfig {
    pub fn build(&self) -> Result<SplineBasis> {
        SplineBasis::new(self.t_min, self.t_max, self.num_intervals)
    }

    /// Q = s + 3.
    pub fn num_basis(&self) -> usize {
        self.num_intervals + 3
    }
}

impl Default for SplineConfig {
    /// A knot every quarter year over five years.
    fn default() -> Self {
        SplineConfig {
            t_min: 0.0,
            t_max: 5.0,
            num_intervals: 20,
        }
    }
}

/// Prior hyperparameters shared by every model in the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Variance of the independent Gaussian priors on every beta coefficient
    /// (and on the scalar link coefficients of the traditional model).
    pub beta_variance: f64,
    /// Wishart "R matrix" for the random-effects precision, here diagonal
    /// with this value; the prior mean of Sigma^{-1} is df * R^{-1}.
    pub wishart_scale_diag: f64,
    /// Wishart degrees of freedom. The applied analysis used N/20 with
    /// N = 500; exposed as configuration with that instance as default.
    pub wishart_df: f64,
    /// Gamma(shape, rate) prior on each smoothing precision 1/tau_l^2.
    pub gamma_smooth: (f64, f64),
    /// Gamma(shape, rate) prior on each piecewise hazard level lambda_k.
    pub gamma_lambda: (f64, f64),
    /// Prior family for sigma_0 (or the sigma_i under EXCHANGEABLE).
    pub sigma0_prior: Sigma0Prior,
    /// Variance of the Gaussian prior on the first spline coefficient.
    pub first_coef_variance: f64,
    /// Gamma(shape, rate) prior on the Weibull shape rho.
    pub weibull_rho_prior: (f64, f64),
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            beta_variance: 100.0,
            wishart_scale_diag: 100.0,
            wishart_df: 25.0,
            gamma_smooth: (0.001, 0.001),
            gamma_lambda: (0.001, 0.001),
            sigma0_prior: Sigma0Prior::LogUniform { bound: 100.0 },
            first_coef_variance: 1000.0,
            weibull_rho_prior: (0.01, 0.01),
        }
    }
}

/// Identifier for the four possible time-varying functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplineId {
    G0,
    G1,
    G2,
    G3,
}

impl SplineId {
    pub const ALL: [SplineId; 4] = [SplineId::G0, SplineId::G1, SplineId::G2, SplineId::G3];

    pub fn index(&self) -> usize {
        match self {
            SplineId::G0 => 0,
            SplineId::G1 => 1,
            SplineId::G2 => 2,
            SplineId::G3 => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplineId::G0 => "g0",
            SplineId::G1 => "g1",
            SplineId::G2 => "g2",
            SplineId::G3 => "g3",
        }
    }
}

/// One cell of the model lattice together with its structural settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variance_model: VarianceModel,
    pub linking: Linking,
    pub baseline: Baseline,
    /// Basis shared by the time-varying link coefficients g1, g2, g3.
    pub link_spline: SplineConfig,
    /// Basis for the log baseline hazard g0 under the P-spline baseline.
    pub baseline_spline: SplineConfig,
    /// Piecewise baseline cut points a_1 .. a_{K+1}; the last may be
    /// infinite. K = grid.len() - 1 hazard levels.
    pub piecewise_grid: Vec<f64>,
    pub priors: PriorConfig,
}

/// The default piecewise partition: 20 quarter-year intervals over [0, 5].
pub fn default_piecewise_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.25).collect()
}

impl ModelSpec {
    pub fn new(variance_model: VarianceModel, linking: Linking, baseline: Baseline) -> Self {
        ModelSpec {
            variance_model,
            linking,
            baseline,
            link_spline: SplineConfig::default(),
            baseline_spline: SplineConfig::default(),
            piecewise_grid: default_piecewise_grid(),
            priors: PriorConfig::default(),
        }
    }

    /// The model selected by the applied analysis.
    pub fn selected() -> Self {
        ModelSpec::new(
            VarianceModel::Exchangeable,
            Linking::SharedSigma,
            Baseline::Pspline,
        )
    }

    /// Dimension p of the subject random-effect vectors.
    pub fn random_effects_dim(&self) -> usize {
        if self.variance_model.has_b2() {
            3
        } else {
            2
        }
    }

    /// Whether the hazard uses the subject standard deviation sigma_i.
    pub fn links_sigma(&self) -> bool {
        matches!(self.linking, Linking::SharedSigma)
    }

    /// Which splines are present in this model.
    pub fn has_spline(&self, id: SplineId) -> bool {
        match id {
            SplineId::G0 => matches!(self.baseline, Baseline::Pspline),
            SplineId::G1 | SplineId::G2 => self.linking.time_varying(),
            SplineId::G3 => self.linking.time_varying() && self.linking.has_g3(),
        }
    }

    pub fn spline_config(&self, id: SplineId) -> &SplineConfig {
        match id {
            SplineId::G0 => &self.baseline_spline,
            _ => &self.link_spline,
        }
    }

    /// Number of piecewise hazard levels.
    pub fn piecewise_k(&self) -> usize {
        self.piecewise_grid.len().saturating_sub(1)
    }

    /// Short label, e.g. `EXCHANGEABLE+SHARED_SIGMA+PSPLINE`.
    pub fn label(&self) -> String {
        format!(
            "{}+{}+{}",
            self.variance_model.name(),
            self.linking.name(),
            self.baseline.name()
        )
    }

    /// Check the structural constraints of the lattice. Returns the list of
    /// violations; an empty list means the spec is admissible.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.linking == Linking::SharedB2 && !self.variance_model.has_b2() {
            violations.push(format!(
                "SHARED_B2 requires a subject dispersion effect b2i, \
                 which {} does not define",
                self.variance_model.name()
            ));
        }
        if self.linking == Linking::ConstantTraditional
            && self.variance_model != VarianceModel::Common
        {
            violations.push(format!(
                "CONSTANT_TRADITIONAL requires the COMMON variance model, got {}",
                self.variance_model.name()
            ));
        }
        if self.baseline == Baseline::Piecewise {
            let g = &self.piecewise_grid;
            if g.len() < 2 {
                violations.push("piecewise grid needs at least two cut points".into());
            } else {
                if g[0] != 0.0 {
                    violations.push(format!("piecewise grid must start at 0, got {}", g[0]));
                }
                if !g.windows(2).all(|w| w[0] < w[1]) {
                    violations.push("piecewise grid must be strictly increasing".into());
                }
                if g[..g.len() - 1].iter().any(|x| !x.is_finite()) {
                    violations.push("only the final piecewise cut point may be infinite".into());
                }
            }
        }
        for id in SplineId::ALL {
            if self.has_spline(id) {
                let c = self.spline_config(id);
                if let Err(e) = c.build() {
                    violations.push(format!("{} basis: {e}", id.name()));
                }
            }
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// The 33 admissible models of the comparison grid, in row-major order
/// (linking group by variance model, baseline varying fastest).
pub fn enumerate_models() -> Vec<ModelSpec> {
    enumerate_models_from(&ModelSpec::selected())
}

/// The same grid, with spline domains, the piecewise partition and the
/// prior hyperparameters copied from a template spec.
pub fn enumerate_models_from(template: &ModelSpec) -> Vec<ModelSpec> {
    let baselines = [Baseline::Weibull, Baseline::Pspline, Baseline::Piecewise];
    let mut specs = Vec::with_capacity(33);
    let dispersion_only = [
        VarianceModel::CovariateDispersion,
        VarianceModel::RandomInterceptDispersion,
    ];
    let all_variance = [
        VarianceModel::CovariateDispersion,
        VarianceModel::RandomInterceptDispersion,
        VarianceModel::Exchangeable,
        VarianceModel::Common,
    ];
    for vm in dispersion_only {
        for bl in baselines {
            specs.push(ModelSpec::new(vm, Linking::SharedB2, bl));
        }
    }
    for vm in all_variance {
        for bl in baselines {
            specs.push(ModelSpec::new(vm, Linking::SharedSigma, bl));
        }
    }
    for vm in all_variance {
        for bl in baselines {
            specs.push(ModelSpec::new(vm, Linking::SlopesOnly, bl));
        }
    }
    for bl in baselines {
        specs.push(ModelSpec::new(
            VarianceModel::Common,
            Linking::ConstantTraditional,
            bl,
        ));
    }
    for spec in specs.iter_mut() {
        spec.link_spline = template.link_spline;
        spec.baseline_spline = template.baseline_spline;
        spec.piecewise_grid = template.piecewise_grid.clone();
        spec.priors = template.priors.clone();
    }
    specs
}

/// One individual's repeated measurements, event information and baseline
/// covariates. Exam times are not required to stay below the event time.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    id: String,
    times: Vec<f64>,
    y: Vec<f64>,
    event_time: f64,
    event: bool,
    sex: u8,
    age: u8,
    prevoi: u8,
}

impl Subject {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        times: Vec<f64>,
        y: Vec<f64>,
        event_time: f64,
        event: bool,
        sex: u8,
        age: u8,
        prevoi: u8,
    ) -> Result<Self> {
        let id = id.into();
        if times.is_empty() {
            return Err(Error::invalid(format!(
                "subject {id}: needs at least one measurement"
            )));
        }
        if times.len() != y.len() {
            return Err(Error::invalid(format!(
                "subject {id}: {} times but {} measurements",
                times.len(),
                y.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid(format!(
                "subject {id}: exam times must be finite and nonnegative"
            )));
        }
        if !times.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::invalid(format!(
                "subject {id}: exam times must be nondecreasing"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "subject {id}: measurements must be finite"
            )));
        }
        if !event_time.is_finite() || event_time < 0.0 {
            return Err(Error::invalid(format!(
                "subject {id}: event time must be finite and nonnegative"
            )));
        }
        for (name, v) in [("sex", sex), ("age", age), ("prevoi", prevoi)] {
            if v > 1 {
                return Err(Error::invalid(format!(
                    "subject {id}: covariate {name} must be 0 or 1, got {v}"
                )));
            }
        }
        Ok(Subject {
            id,
            times,
            y,
            event_time,
            event,
            sex,
            age,
            prevoi,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_obs(&self) -> usize {
        self.times.len()
    }

    pub fn event_time(&self) -> f64 {
        self.event_time
    }

    pub fn event(&self) -> bool {
        self.event
    }

    pub fn sex(&self) -> u8 {
        self.sex
    }

    pub fn age(&self) -> u8 {
        self.age
    }

    pub fn prevoi(&self) -> u8 {
        self.prevoi
    }

    /// (sex, age, prevoi) as reals; the same triple serves the mean,
    /// dispersion and survival predictors in the applied model forms.
    pub fn covariates(&self) -> [f64; 3] {
        [self.sex as f64, self.age as f64, self.prevoi as f64]
    }
}

/// A cohort of independent subjects with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    subjects: Vec<Subject>,
}

impl Dataset {
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::invalid("dataset needs at least one subject"));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &subjects {
            if !seen.insert(s.id().to_string()) {
                return Err(Error::invalid(format!("duplicate subject id {}", s.id())));
            }
        }
        Ok(Dataset { subjects })
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn subject(&self, i: usize) -> &Subject {
        &self.subjects[i]
    }

    pub fn total_observations(&self) -> usize {
        self.subjects.iter().map(|s| s.n_obs()).sum()
    }
}

/// One complete point in parameter space. Optional fields are present
/// exactly when the model spec requires them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    /// beta_10 .. beta_14: intercept, time, sex, age, prevoi.
    pub beta1: [f64; 5],
    /// beta_21 .. beta_23 (dispersion covariates), COVARIATE_DISPERSION only.
    pub beta2: Option<[f64; 3]>,
    /// beta_31 .. beta_33 (survival covariates).
    pub beta3: [f64; 3],
    /// N x p random effects, p = 3 when a b_2i exists, else 2.
    pub b: Vec<Vec<f64>>,
    /// Precision matrix of the random effects, p x p.
    pub sigma_inv: DMatrix<f64>,
    /// log sigma_0 for the COMMON and dispersion variance models.
    pub log_sigma0: Option<f64>,
    /// Per-subject log sigma_i under EXCHANGEABLE.
    pub log_sigma: Option<Vec<f64>>,
    /// Scale of the half-Cauchy prior when that family is selected.
    pub half_cauchy_scale: Option<f64>,
    /// Spline coefficients gamma_0 .. gamma_3, present per spec.
    pub gamma: [Option<Vec<f64>>; 4],
    /// Smoothing variances tau_0^2 .. tau_3^2, aligned with `gamma`.
    pub tau2: [Option<f64>; 4],
    /// Piecewise hazard levels, PIECEWISE only.
    pub lambda: Option<Vec<f64>>,
    /// Weibull shape, WEIBULL only.
    pub rho: Option<f64>,
    /// Scalar link coefficients of the traditional model.
    pub g1_const: Option<f64>,
    pub g2_const: Option<f64>,
}

impl ParameterState {
    /// A zero-centered state of the right shape for `spec` and `n` subjects.
    pub fn zeros(spec: &ModelSpec, n: usize) -> Self {
        let p = spec.random_effects_dim();
        let mut gamma: [Option<Vec<f64>>; 4] = [None, None, None, None];
        let mut tau2 = [None, None, None, None];
        for id in SplineId::ALL {
            if spec.has_spline(id) {
                gamma[id.index()] = Some(vec![0.0; spec.spline_config(id).num_basis()]);
                tau2[id.index()] = Some(1.0);
            }
        }
        let uses_half_cauchy = matches!(spec.priors.sigma0_prior, Sigma0Prior::HalfCauchy { .. });
        ParameterState {
            beta1: [0.0; 5],
            beta2: (spec.variance_model == VarianceModel::CovariateDispersion)
                .then_some([0.0; 3]),
            beta3: [0.0; 3],
            b: vec![vec![0.0; p]; n],
            sigma_inv: DMatrix::identity(p, p),
            log_sigma0: (spec.variance_model != VarianceModel::Exchangeable).then_some(0.0),
            log_sigma: (spec.variance_model == VarianceModel::Exchangeable)
                .then_some(vec![0.0; n]),
            half_cauchy_scale: uses_half_cauchy.then_some(10.0),
            gamma,
            tau2,
            lambda: (spec.baseline == Baseline::Piecewise)
                .then_some(vec![1.0; spec.piecewise_k()]),
            rho: (spec.baseline == Baseline::Weibull).then_some(1.0),
            g1_const: (spec.linking == Linking::ConstantTraditional).then_some(0.0),
            g2_const: (spec.linking == Linking::ConstantTraditional).then_some(0.0),
        }
    }

    /// Number of subjects this state is sized for.
    pub fn n_subjects(&self) -> usize {
        self.b.len()
    }

    /// Subject standard deviation sigma_i implied by the state; used by the
    /// SHARED_SIGMA link. Requires a consistent state.
    pub fn gamma_ref(&self, id: SplineId) -> Option<&Vec<f64>> {
        self.gamma[id.index()].as_ref()
    }

    /// Check shape-consistency of the state against a spec and subject count.
    pub fn check_consistent(&self, spec: &ModelSpec, n: usize) -> Result<()> {
        let p = spec.random_effects_dim();
        if self.b.len() != n {
            return Err(Error::invalid(format!(
                "state has {} random-effect rows for {n} subjects",
                self.b.len()
            )));
        }
        if self.b.iter().any(|row| row.len() != p) {
            return Err(Error::invalid("random-effect rows must have length p"));
        }
        if self.sigma_inv.nrows() != p || self.sigma_inv.ncols() != p {
            return Err(Error::invalid("sigma_inv must be p x p"));
        }
        if (spec.variance_model == VarianceModel::CovariateDispersion) != self.beta2.is_some() {
            return Err(Error::invalid("beta2 presence inconsistent with spec"));
        }
        match spec.variance_model {
            VarianceModel::Exchangeable => {
                let ls = self
                    .log_sigma
                    .as_ref()
                    .ok_or_else(|| Error::invalid("EXCHANGEABLE state needs log_sigma"))?;
                if ls.len() != n {
                    return Err(Error::invalid("log_sigma must have one entry per subject"));
                }
            }
            _ => {
                if self.log_sigma0.is_none() {
                    return Err(Error::invalid("state needs log_sigma0"));
                }
            }
        }
        for id in SplineId::ALL {
            let expected = spec.has_spline(id);
            if expected != self.gamma[id.index()].is_some()
                || expected != self.tau2[id.index()].is_some()
            {
                return Err(Error::invalid(format!(
                    "spline {} presence inconsistent with spec",
                    id.name()
                )));
            }
            if let Some(g) = &self.gamma[id.index()] {
                if g.len() != spec.spline_config(id).num_basis() {
                    return Err(Error::invalid(format!(
                        "gamma {} has length {}, basis needs {}",
                        id.name(),
                        g.len(),
                        spec.spline_config(id).num_basis()
                    )));
                }
            }
            if let Some(t2) = self.tau2[id.index()] {
                if !(t2 > 0.0) {
                    return Err(Error::invalid("tau2 must be positive"));
                }
            }
        }
        if (spec.baseline == Baseline::Piecewise) != self.lambda.is_some() {
            return Err(Error::invalid("lambda presence inconsistent with spec"));
        }
        if let Some(l) = &self.lambda {
            if l.len() != spec.piecewise_k() {
                return Err(Error::invalid("lambda must have one entry per interval"));
            }
            if l.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::invalid("lambda entries must be positive"));
            }
        }
        if (spec.baseline == Baseline::Weibull) != self.rho.is_some() {
            return Err(Error::invalid("rho presence inconsistent with spec"));
        }
        if let Some(r) = self.rho {
            if !(r > 0.0) {
                return Err(Error::invalid("rho must be positive"));
            }
        }
        let traditional = spec.linking == Linking::ConstantTraditional;
        if traditional != self.g1_const.is_some() || traditional != self.g2_const.is_some() {
            return Err(Error::invalid("scalar g presence inconsistent with spec"));
        }
        Ok(())
    }
}
