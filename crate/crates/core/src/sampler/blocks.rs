//! The adaptive Metropolis-within-Gibbs engine.
//!
//! Every iteration walks the update blocks in a fixed order: the beta
//! vectors (random-walk Metropolis per block), each subject's random
//! effects, the random-effects precision (conjugate Wishart Gibbs), each
//! spline coefficient vector (a level-shift move and a jitter move, both
//! symmetric), the smoothing precisions (conjugate Gamma Gibbs), the
//! variance parameters, and the baseline-hazard parameters. Proposal scales
//! adapt toward their target acceptance rates during burn-in only and are
//! frozen afterwards, so the retained draws come from a fixed kernel.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::longitudinal::long_loglik_counted;
use crate::model::{
    Baseline, Dataset, Linking, ModelSpec, ParameterState, Sigma0Prior, SplineId, VarianceModel,
};
use crate::quadrature::Gk15Rule;
use crate::sampler::chain::{BlockStats, PosteriorChain};
use crate::sampler::prior::{
    beta_prior_term, ln_det_spd, log_sigma_prior_term, mvn_logpdf_prec, varpi_prior_term,
};
use crate::sampler::SamplerConfig;
use crate::spline::{log_rw1_prior, rw1_sum_sq};
use crate::survival::{surv_loglik_geom, SurvBases, SurvGeometry};
use crate::waic::LoglikMatrix;

/// Update blocks that can be frozen (left at their initial values), used by
/// reduction tests and warm-start experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Beta1,
    Beta2,
    Beta3,
    RandomEffects,
    SigmaInv,
    Gamma(SplineId),
    Tau(SplineId),
    SigmaVariances,
    HalfCauchyScale,
    Lambda,
    Rho,
    GConst,
}

/// Optional sampler controls beyond the basic configuration.
#[derive(Debug, Clone, Default)]
pub struct AdvancedOptions {
    /// Blocks that are never updated.
    pub freeze: HashSet<BlockKind>,
    /// Explicit starting point (must be consistent with the spec).
    pub initial_state: Option<ParameterState>,
}

/// One adaptive proposal scale with its acceptance bookkeeping.
#[derive(Debug, Clone)]
struct Adapt {
    name: String,
    scale: f64,
    target: f64,
    window_props: u64,
    window_accepts: u64,
    batches: u64,
    total_props: u64,
    total_accepts: u64,
}

impl Adapt {
    fn new(name: String, scale: f64, target: f64) -> Self {
        Adapt {
            name,
            scale,
            target,
            window_props: 0,
            window_accepts: 0,
            batches: 0,
            total_props: 0,
            total_accepts: 0,
        }
    }

    fn record(&mut self, accepted: bool) {
        self.window_props += 1;
        self.total_props += 1;
        if accepted {
            self.window_accepts += 1;
            self.total_accepts += 1;
        }
    }

    fn adapt(&mut self) {
        if self.window_props == 0 {
            return;
        }
        let rate = self.window_accepts as f64 / self.window_props as f64;
        let delta = (1.0 / ((self.batches + 1) as f64).sqrt()).min(0.1);
        if rate > self.target {
            self.scale *= delta.exp();
        } else {
            self.scale *= (-delta).exp();
        }
        self.batches += 1;
        self.window_props = 0;
        self.window_accepts = 0;
    }

    fn stats(&self) -> BlockStats {
        BlockStats {
            name: self.name.clone(),
            proposals: self.total_props,
            accepted: self.total_accepts,
            final_scale: self.scale,
        }
    }
}

/// Indices into the flat adapt list.
struct AdaptSet {
    items: Vec<Adapt>,
    beta1: usize,
    beta2: Option<usize>,
    beta3: usize,
    b_start: usize,
    gamma_shift: [Option<usize>; 4],
    gamma_jitter: [Option<usize>; 4],
    log_sigma0: Option<usize>,
    log_sigma_start: Option<usize>,
    varpi: Option<usize>,
    lambda_start: Option<usize>,
    rho: Option<usize>,
    g1: Option<usize>,
    g2: Option<usize>,
}

impl AdaptSet {
    fn new(spec: &ModelSpec, n: usize, cfg: &SamplerConfig) -> Self {
        let tv = cfg.target_accept_vector;
        let ts = cfg.target_accept_scalar;
        let mut items = Vec::new();
        let push = |items: &mut Vec<Adapt>, name: String, scale: f64, target: f64| {
            items.push(Adapt::new(name, scale, target));
            items.len() - 1
        };
        let beta1 = push(&mut items, "beta1".into(), 0.5, tv);
        let beta2 = (spec.variance_model == VarianceModel::CovariateDispersion)
            .then(|| push(&mut items, "beta2".into(), 0.5, tv));
        let beta3 = push(&mut items, "beta3".into(), 0.5, tv);
        let b_start = items.len();
        for i in 1..=n {
            push(&mut items, format!("b_{i}"), 0.5, tv);
        }
        let mut gamma_shift = [None; 4];
        let mut gamma_jitter = [None; 4];
        for id in SplineId::ALL {
            if spec.has_spline(id) {
                gamma_shift[id.index()] = Some(push(
                    &mut items,
                    format!("gamma{}_shift", id.index()),
                    1.0,
                    ts,
                ));
                gamma_jitter[id.index()] = Some(push(
                    &mut items,
                    format!("gamma{}_jitter", id.index()),
                    0.2,
                    tv,
                ));
            }
        }
        let exch = spec.variance_model == VarianceModel::Exchangeable;
        let log_sigma0 = (!exch).then(|| push(&mut items, "log_sigma0".into(), 0.3, ts));
        let log_sigma_start = exch.then(|| {
            let start = items.len();
            for i in 1..=n {
                push(&mut items, format!("log_sigma_{i}"), 0.3, ts);
            }
            start
        });
        let varpi = matches!(spec.priors.sigma0_prior, Sigma0Prior::HalfCauchy { .. })
            .then(|| push(&mut items, "varpi".into(), 5.0, ts));
        let lambda_start = (spec.baseline == Baseline::Piecewise).then(|| {
            let start = items.len();
            for k in 1..=spec.piecewise_k() {
                push(&mut items, format!("lambda_{k}"), 0.5, ts);
            }
            start
        });
        let rho = (spec.baseline == Baseline::Weibull)
            .then(|| push(&mut items, "rho".into(), 0.3, ts));
        let (g1, g2) = if spec.linking == Linking::ConstantTraditional {
            (
                Some(push(&mut items, "g1".into(), 0.3, ts)),
                Some(push(&mut items, "g2".into(), 0.3, ts)),
            )
        } else {
            (None, None)
        };
        AdaptSet {
            items,
            beta1,
            beta2,
            beta3,
            b_start,
            gamma_shift,
            gamma_jitter,
            log_sigma0,
            log_sigma_start,
            varpi,
            lambda_start,
            rho,
            g1,
            g2,
        }
    }
}

pub(crate) struct Engine<'a> {
    data: &'a Dataset,
    spec: &'a ModelSpec,
    cfg: &'a SamplerConfig,
    rule: Gk15Rule,
    geoms: Vec<SurvGeometry>,
    likelihood_on: bool,
    freeze: HashSet<BlockKind>,
    state: ParameterState,
    long_ll: Vec<f64>,
    surv_ll: Vec<f64>,
    b_prior: Vec<f64>,
    ln_det_prec: f64,
    rng: ChaCha12Rng,
    adapts: AdaptSet,
    clamps: u64,
    numeric_rejections: u64,
    gibbs_sigma_count: u64,
    gibbs_tau_count: [u64; 4],
}

enum Eval {
    Val(f64),
    Reject,
}

fn screen(r: Result<f64>) -> Result<Eval> {
    match r {
        Ok(v) if !v.is_nan() => Ok(Eval::Val(v)),
        Ok(_) => Ok(Eval::Reject),
        Err(Error::Numeric(_)) => Ok(Eval::Reject),
        Err(e) => Err(e),
    }
}

impl<'a> Engine<'a> {
    pub fn new(
        data: &'a Dataset,
        spec: &'a ModelSpec,
        cfg: &'a SamplerConfig,
        options: &AdvancedOptions,
        likelihood_on: bool,
    ) -> Result<Self> {
        let violations = spec.validate();
        if !violations.is_empty() {
            return Err(Error::invalid(format!(
                "model spec is not admissible: {}",
                violations.join("; ")
            )));
        }
        cfg.validate()?;
        let n = data.len();
        let rule = Gk15Rule::standard();
        let bases = SurvBases::new(spec)?;
        let geoms = if likelihood_on {
            data.subjects()
                .iter()
                .map(|s| SurvGeometry::build(spec, &bases, s, &rule))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let base_state = match &options.initial_state {
            Some(s) => {
                s.check_consistent(spec, n)?;
                s.clone()
            }
            None => initial_state(data, spec, likelihood_on),
        };
        let adapts = AdaptSet::new(spec, n, cfg);
        let mut engine = Engine {
            data,
            spec,
            cfg,
            rule,
            geoms,
            likelihood_on,
            freeze: options.freeze.clone(),
            state: base_state.clone(),
            long_ll: vec![0.0; n],
            surv_ll: vec![0.0; n],
            b_prior: vec![0.0; n],
            ln_det_prec: 0.0,
            rng: ChaCha12Rng::seed_from_u64(0),
            adapts,
            clamps: 0,
            numeric_rejections: 0,
            gibbs_sigma_count: 0,
            gibbs_tau_count: [0; 4],
        };
        // find a starting point with a finite posterior
        let mut attempt = 0;
        loop {
            match engine.rebuild_caches() {
                Ok(total) if total.is_finite() => break,
                _ => {
                    attempt += 1;
                    if attempt > 100 {
                        return Err(Error::Fit(
                            "no finite initial posterior after 100 re-initialization attempts"
                                .into(),
                        ));
                    }
                    engine.state = base_state.clone();
                    jitter_state(&mut engine.state, &mut rng, attempt);
                }
            }
        }
        engine.rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        Ok(engine)
    }

    /// Recompute every cached likelihood and prior term; returns the total
    /// log posterior.
    fn rebuild_caches(&mut self) -> Result<f64> {
        let n = self.data.len();
        self.ln_det_prec = ln_det_spd(&self.state.sigma_inv).unwrap_or(f64::NEG_INFINITY);
        let mut total = crate::sampler::prior::log_prior(&self.state, self.spec);
        for i in 0..n {
            self.b_prior[i] =
                mvn_logpdf_prec(&self.state.b[i], &self.state.sigma_inv, self.ln_det_prec);
            if self.likelihood_on {
                self.long_ll[i] = long_loglik_counted(
                    self.data.subject(i),
                    &self.state,
                    self.spec,
                    i,
                    &mut self.clamps,
                )?;
                self.surv_ll[i] = surv_loglik_geom(
                    &self.geoms[i],
                    &self.state,
                    self.spec,
                    self.data.subject(i),
                    i,
                    &self.rule,
                    &mut self.clamps,
                )?;
            } else {
                self.long_ll[i] = 0.0;
                self.surv_ll[i] = 0.0;
            }
            total += self.long_ll[i] + self.surv_ll[i];
        }
        Ok(total)
    }

    fn frozen(&self, kind: BlockKind) -> bool {
        self.freeze.contains(&kind)
    }

    fn std_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        let u: f64 = self.rng.random();
        u.ln() < log_ratio
    }

    fn eval_long(&mut self, i: usize) -> Result<Eval> {
        if !self.likelihood_on {
            return Ok(Eval::Val(0.0));
        }
        screen(long_loglik_counted(
            self.data.subject(i),
            &self.state,
            self.spec,
            i,
            &mut self.clamps,
        ))
    }

    fn eval_surv(&mut self, i: usize) -> Result<Eval> {
        if !self.likelihood_on {
            return Ok(Eval::Val(0.0));
        }
        screen(surv_loglik_geom(
            &self.geoms[i],
            &self.state,
            self.spec,
            self.data.subject(i),
            i,
            &self.rule,
            &mut self.clamps,
        ))
    }

    /// Evaluate all subjects' longitudinal (and optionally survival) terms
    /// under the current (candidate) state. Returns the total delta against
    /// the caches, or None to reject.
    fn delta_all(&mut self, long: bool, surv: bool) -> Result<Option<(f64, Vec<f64>, Vec<f64>)>> {
        let n = self.data.len();
        let mut new_long = Vec::new();
        let mut new_surv = Vec::new();
        let mut delta = 0.0;
        if long {
            new_long.reserve(n);
            for i in 0..n {
                match self.eval_long(i)? {
                    Eval::Val(v) => {
                        delta += v - self.long_ll[i];
                        new_long.push(v);
                    }
                    Eval::Reject => return Ok(None),
                }
            }
        }
        if surv {
            new_surv.reserve(n);
            for i in 0..n {
                match self.eval_surv(i)? {
                    Eval::Val(v) => {
                        delta += v - self.surv_ll[i];
                        new_surv.push(v);
                    }
                    Eval::Reject => return Ok(None),
                }
            }
        }
        Ok(Some((delta, new_long, new_surv)))
    }

    fn commit_all(&mut self, new_long: Vec<f64>, new_surv: Vec<f64>) {
        if !new_long.is_empty() {
            self.long_ll = new_long;
        }
        if !new_surv.is_empty() {
            self.surv_ll = new_surv;
        }
    }

    // ---- beta blocks ------------------------------------------------------

    fn update_beta1(&mut self) -> Result<()> {
        if self.frozen(BlockKind::Beta1) {
            return Ok(());
        }
        let scale = self.adapts.items[self.adapts.beta1].scale;
        let old = self.state.beta1;
        let mut cand = old;
        for v in cand.iter_mut() {
            *v += scale * self.std_normal();
        }
        let pv = self.spec.priors.beta_variance;
        let mut delta: f64 = (0..5)
            .map(|k| beta_prior_term(cand[k], pv) - beta_prior_term(old[k], pv))
            .sum();
        self.state.beta1 = cand;
        let outcome = self.delta_all(true, false)?;
        let accepted = match outcome {
            Some((dll, new_long, new_surv)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(new_long, new_surv);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.beta1 = old;
        }
        self.adapts.items[self.adapts.beta1].record(accepted);
        Ok(())
    }

    fn update_beta2(&mut self) -> Result<()> {
        let Some(idx) = self.adapts.beta2 else {
            return Ok(());
        };
        if self.frozen(BlockKind::Beta2) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = self.state.beta2.expect("beta2 present");
        let mut cand = old;
        for v in cand.iter_mut() {
            *v += scale * self.std_normal();
        }
        let pv = self.spec.priors.beta_variance;
        let mut delta: f64 = (0..3)
            .map(|k| beta_prior_term(cand[k], pv) - beta_prior_term(old[k], pv))
            .sum();
        self.state.beta2 = Some(cand);
        // beta2 moves sigma_i, which feeds the hazard under SHARED_SIGMA
        let needs_surv = self.spec.links_sigma();
        let outcome = self.delta_all(true, needs_surv)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.beta2 = Some(old);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    fn update_beta3(&mut self) -> Result<()> {
        if self.frozen(BlockKind::Beta3) {
            return Ok(());
        }
        let scale = self.adapts.items[self.adapts.beta3].scale;
        let old = self.state.beta3;
        let mut cand = old;
        for v in cand.iter_mut() {
            *v += scale * self.std_normal();
        }
        let pv = self.spec.priors.beta_variance;
        let mut delta: f64 = (0..3)
            .map(|k| beta_prior_term(cand[k], pv) - beta_prior_term(old[k], pv))
            .sum();
        self.state.beta3 = cand;
        let outcome = self.delta_all(false, true)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.beta3 = old;
        }
        self.adapts.items[self.adapts.beta3].record(accepted);
        Ok(())
    }

    // ---- random effects ----------------------------------------------------

    fn update_b(&mut self, i: usize) -> Result<()> {
        let idx = self.adapts.b_start + i;
        let scale = self.adapts.items[idx].scale;
        let old: Vec<f64> = self.state.b[i].clone();
        let p = old.len();
        let mut cand = old.clone();
        for v in cand.iter_mut() {
            *v += scale * self.std_normal();
        }
        let new_prior = mvn_logpdf_prec(&cand, &self.state.sigma_inv, self.ln_det_prec);
        let mut delta = new_prior - self.b_prior[i];
        self.state.b[i] = cand;
        let long = self.eval_long(i)?;
        let surv = self.eval_surv(i)?;
        let accepted = match (long, surv) {
            (Eval::Val(l), Eval::Val(s)) => {
                delta += (l - self.long_ll[i]) + (s - self.surv_ll[i]);
                if self.accept(delta) {
                    self.long_ll[i] = l;
                    self.surv_ll[i] = s;
                    self.b_prior[i] = new_prior;
                    true
                } else {
                    false
                }
            }
            _ => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.b[i][..p].copy_from_slice(&old);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    /// Conjugate Wishart update of the random-effects precision.
    fn gibbs_sigma_inv(&mut self) -> Result<()> {
        let p = self.spec.random_effects_dim();
        let n = self.data.len();
        let r = self.spec.priors.wishart_scale_diag;
        let df = self.spec.priors.wishart_df + n as f64;
        // BUGS-convention scale update: R' = R + sum_i b_i b_i'
        let mut r_mat = DMatrix::from_diagonal_element(p, p, r);
        for row in &self.state.b {
            for j in 0..p {
                for k in 0..p {
                    r_mat[(j, k)] += row[j] * row[k];
                }
            }
        }
        let v = r_mat
            .try_inverse()
            .ok_or_else(|| Error::numeric("Wishart scale update not invertible"))?;
        let chol = nalgebra::Cholesky::new(v)
            .ok_or_else(|| Error::numeric("Wishart scale update not positive definite"))?;
        let l = chol.l();
        // Bartlett decomposition
        let mut a = DMatrix::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new(df - i as f64)
                .map_err(|e| Error::numeric(format!("chi-squared sampling: {e}")))?;
            a[(i, i)] = chi.sample(&mut self.rng).sqrt();
            for j in 0..i {
                a[(i, j)] = self.std_normal();
            }
        }
        let la = l * a;
        let w = &la * la.transpose();
        self.state.sigma_inv = w;
        self.ln_det_prec = ln_det_spd(&self.state.sigma_inv)
            .ok_or_else(|| Error::numeric("sampled precision not positive definite"))?;
        for i in 0..n {
            self.b_prior[i] =
                mvn_logpdf_prec(&self.state.b[i], &self.state.sigma_inv, self.ln_det_prec);
        }
        self.gibbs_sigma_count += 1;
        Ok(())
    }

    // ---- spline blocks ------------------------------------------------------

    fn gamma_prior(&self, id: SplineId) -> f64 {
        let gamma = self.state.gamma[id.index()].as_ref().expect("gamma present");
        let tau2 = self.state.tau2[id.index()].expect("tau2 present");
        log_rw1_prior(gamma, tau2, self.spec.priors.first_coef_variance)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn update_gamma_move(&mut self, id: SplineId, shift_move: bool) -> Result<()> {
        let slot = if shift_move {
            self.adapts.gamma_shift[id.index()]
        } else {
            self.adapts.gamma_jitter[id.index()]
        };
        let Some(idx) = slot else { return Ok(()) };
        if self.frozen(BlockKind::Gamma(id)) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = self.state.gamma[id.index()].clone().expect("gamma present");
        let old_prior = self.gamma_prior(id);
        let mut cand = old.clone();
        if shift_move {
            let eta = scale * self.std_normal();
            for v in cand.iter_mut() {
                *v += eta;
            }
        } else {
            for v in cand.iter_mut() {
                *v += scale * self.std_normal();
            }
        }
        self.state.gamma[id.index()] = Some(cand);
        let mut delta = self.gamma_prior(id) - old_prior;
        let outcome = self.delta_all(false, true)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.gamma[id.index()] = Some(old);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    /// Conjugate Gamma update of 1/tau_l^2 given the coefficient increments.
    fn gibbs_tau(&mut self, id: SplineId) -> Result<()> {
        if self.frozen(BlockKind::Tau(id)) {
            return Ok(());
        }
        let gamma = self.state.gamma[id.index()].as_ref().expect("gamma present");
        let q = gamma.len() as f64;
        let ss = rw1_sum_sq(gamma);
        let (a0, b0) = self.spec.priors.gamma_smooth;
        let shape = a0 + 0.5 * (q - 1.0);
        let rate = b0 + 0.5 * ss;
        // rand_distr Gamma takes shape and scale
        let gd = rand_distr::Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::numeric(format!("gamma sampling: {e}")))?;
        let u: f64 = gd.sample(&mut self.rng);
        if u > 0.0 && u.is_finite() {
            self.state.tau2[id.index()] = Some(1.0 / u);
        }
        self.gibbs_tau_count[id.index()] += 1;
        Ok(())
    }

    // ---- variance blocks ----------------------------------------------------

    fn sigma_prior_term(&self, log_sigma: f64) -> f64 {
        log_sigma_prior_term(
            log_sigma,
            &self.spec.priors.sigma0_prior,
            self.state.half_cauchy_scale,
        )
    }

    fn update_log_sigma0(&mut self) -> Result<()> {
        let Some(idx) = self.adapts.log_sigma0 else {
            return Ok(());
        };
        if self.frozen(BlockKind::SigmaVariances) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = self.state.log_sigma0.expect("log_sigma0 present");
        let cand = old + scale * self.std_normal();
        let mut delta = self.sigma_prior_term(cand) - self.sigma_prior_term(old);
        self.state.log_sigma0 = Some(cand);
        let needs_surv = self.spec.links_sigma();
        let outcome = if delta == f64::NEG_INFINITY {
            Some((f64::NEG_INFINITY, Vec::new(), Vec::new()))
        } else {
            self.delta_all(true, needs_surv)?
        };
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.log_sigma0 = Some(old);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    fn update_log_sigma_subject(&mut self, i: usize) -> Result<()> {
        let Some(start) = self.adapts.log_sigma_start else {
            return Ok(());
        };
        if self.frozen(BlockKind::SigmaVariances) {
            return Ok(());
        }
        let idx = start + i;
        let scale = self.adapts.items[idx].scale;
        let old = self.state.log_sigma.as_ref().expect("log_sigma present")[i];
        let cand = old + scale * self.std_normal();
        let mut delta = self.sigma_prior_term(cand) - self.sigma_prior_term(old);
        self.state.log_sigma.as_mut().expect("log_sigma present")[i] = cand;
        let needs_surv = self.spec.links_sigma();
        let accepted = if delta == f64::NEG_INFINITY {
            false
        } else {
            let long = self.eval_long(i)?;
            let surv = if needs_surv {
                self.eval_surv(i)?
            } else {
                Eval::Val(self.surv_ll[i])
            };
            match (long, surv) {
                (Eval::Val(l), Eval::Val(s)) => {
                    delta += (l - self.long_ll[i]) + (s - self.surv_ll[i]);
                    if self.accept(delta) {
                        self.long_ll[i] = l;
                        self.surv_ll[i] = s;
                        true
                    } else {
                        false
                    }
                }
                _ => {
                    self.numeric_rejections += 1;
                    false
                }
            }
        };
        if !accepted {
            self.state.log_sigma.as_mut().expect("log_sigma present")[i] = old;
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    /// Metropolis update of the half-Cauchy mixture scale; its target is the
    /// product of half-Cauchy terms over the sigma parameters it governs.
    fn update_varpi(&mut self) -> Result<()> {
        let Some(idx) = self.adapts.varpi else {
            return Ok(());
        };
        if self.frozen(BlockKind::HalfCauchyScale) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = self.state.half_cauchy_scale.expect("varpi present");
        let cand = old + scale * self.std_normal();
        let prior = &self.spec.priors.sigma0_prior;
        let mut delta = varpi_prior_term(cand, prior) - varpi_prior_term(old, prior);
        if delta.is_finite() {
            match &self.state.log_sigma {
                Some(ls) => {
                    for v in ls {
                        delta += log_sigma_prior_term(*v, prior, Some(cand))
                            - log_sigma_prior_term(*v, prior, Some(old));
                    }
                }
                None => {
                    let v = self.state.log_sigma0.expect("log_sigma0 present");
                    delta += log_sigma_prior_term(v, prior, Some(cand))
                        - log_sigma_prior_term(v, prior, Some(old));
                }
            }
        }
        let accepted = self.accept(delta);
        if accepted {
            self.state.half_cauchy_scale = Some(cand);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    // ---- baseline blocks ------------------------------------------------------

    fn update_lambda(&mut self, k: usize) -> Result<()> {
        let Some(start) = self.adapts.lambda_start else {
            return Ok(());
        };
        if self.frozen(BlockKind::Lambda) {
            return Ok(());
        }
        let idx = start + k;
        let scale = self.adapts.items[idx].scale;
        let old = self.state.lambda.as_ref().expect("lambda present")[k];
        let w_old = old.ln();
        let w_new = w_old + scale * self.std_normal();
        let cand = w_new.exp();
        let (a0, b0) = self.spec.priors.gamma_lambda;
        // Gamma prior on lambda plus the log-scale proposal Jacobian
        let mut delta = crate::math::ln_gamma_pdf(cand, a0, b0)
            - crate::math::ln_gamma_pdf(old, a0, b0)
            + (w_new - w_old);
        self.state.lambda.as_mut().expect("lambda present")[k] = cand;
        let outcome = self.delta_all(false, true)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.lambda.as_mut().expect("lambda present")[k] = old;
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    fn update_rho(&mut self) -> Result<()> {
        let Some(idx) = self.adapts.rho else {
            return Ok(());
        };
        if self.frozen(BlockKind::Rho) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = self.state.rho.expect("rho present");
        let w_old = old.ln();
        let w_new = w_old + scale * self.std_normal();
        let cand = w_new.exp();
        let (a0, b0) = self.spec.priors.weibull_rho_prior;
        let mut delta = crate::math::ln_gamma_pdf(cand, a0, b0)
            - crate::math::ln_gamma_pdf(old, a0, b0)
            + (w_new - w_old);
        self.state.rho = Some(cand);
        let outcome = self.delta_all(false, true)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            self.state.rho = Some(old);
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    fn update_g_const(&mut self, second: bool) -> Result<()> {
        let slot = if second { self.adapts.g2 } else { self.adapts.g1 };
        let Some(idx) = slot else { return Ok(()) };
        if self.frozen(BlockKind::GConst) {
            return Ok(());
        }
        let scale = self.adapts.items[idx].scale;
        let old = if second {
            self.state.g2_const.expect("g2 present")
        } else {
            self.state.g1_const.expect("g1 present")
        };
        let cand = old + scale * self.std_normal();
        let pv = self.spec.priors.beta_variance;
        let mut delta = beta_prior_term(cand, pv) - beta_prior_term(old, pv);
        if second {
            self.state.g2_const = Some(cand);
        } else {
            self.state.g1_const = Some(cand);
        }
        let outcome = self.delta_all(false, true)?;
        let accepted = match outcome {
            Some((dll, nl, ns)) => {
                delta += dll;
                if self.accept(delta) {
                    self.commit_all(nl, ns);
                    true
                } else {
                    false
                }
            }
            None => {
                self.numeric_rejections += 1;
                false
            }
        };
        if !accepted {
            if second {
                self.state.g2_const = Some(old);
            } else {
                self.state.g1_const = Some(old);
            }
        }
        self.adapts.items[idx].record(accepted);
        Ok(())
    }

    fn iterate(&mut self) -> Result<()> {
        self.update_beta1()?;
        self.update_beta2()?;
        self.update_beta3()?;
        if !self.frozen(BlockKind::RandomEffects) {
            for i in 0..self.data.len() {
                self.update_b(i)?;
            }
        }
        if !self.frozen(BlockKind::SigmaInv) {
            self.gibbs_sigma_inv()?;
        }
        for id in SplineId::ALL {
            if self.spec.has_spline(id) {
                self.update_gamma_move(id, true)?;
                self.update_gamma_move(id, false)?;
                self.gibbs_tau(id)?;
            }
        }
        match self.spec.variance_model {
            VarianceModel::Exchangeable => {
                if !self.frozen(BlockKind::SigmaVariances) {
                    for i in 0..self.data.len() {
                        self.update_log_sigma_subject(i)?;
                    }
                }
            }
            _ => self.update_log_sigma0()?,
        }
        self.update_varpi()?;
        if self.spec.baseline == Baseline::Piecewise {
            for k in 0..self.spec.piecewise_k() {
                self.update_lambda(k)?;
            }
        }
        self.update_rho()?;
        if self.spec.linking == Linking::ConstantTraditional {
            self.update_g_const(false)?;
            self.update_g_const(true)?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<PosteriorChain> {
        let cfg = self.cfg;
        let n = self.data.len();
        let retained = (cfg.iterations - cfg.burn_in) / cfg.thin;
        let mut draws = Vec::with_capacity(retained);
        let mut pointwise = Vec::with_capacity(retained * n);
        for iter in 1..=cfg.iterations {
            self.iterate()?;
            if iter <= cfg.burn_in {
                if iter % cfg.adaptation_window == 0 {
                    for a in self.adapts.items.iter_mut() {
                        a.adapt();
                    }
                }
            } else if (iter - cfg.burn_in) % cfg.thin == 0 {
                draws.push(self.state.clone());
                for i in 0..n {
                    pointwise.push(self.long_ll[i] + self.surv_ll[i]);
                }
            }
        }
        let mut blocks: Vec<BlockStats> = self.adapts.items.iter().map(|a| a.stats()).collect();
        blocks.push(BlockStats {
            name: "sigma_inv_gibbs".into(),
            proposals: self.gibbs_sigma_count,
            accepted: self.gibbs_sigma_count,
            final_scale: 0.0,
        });
        for id in SplineId::ALL {
            if self.spec.has_spline(id) {
                blocks.push(BlockStats {
                    name: format!("tau2_{}_gibbs", id.index()),
                    proposals: self.gibbs_tau_count[id.index()],
                    accepted: self.gibbs_tau_count[id.index()],
                    final_scale: 0.0,
                });
            }
        }
        Ok(PosteriorChain {
            spec: self.spec.clone(),
            draws,
            pointwise: LoglikMatrix::new(retained, n, pointwise)?,
            blocks,
            clamp_events: self.clamps,
            numeric_rejections: self.numeric_rejections,
        })
    }
}

/// Data-informed starting point: pooled least squares for the fixed effects
/// and a residual-based variance; everything else at neutral values inside
/// every prior's support.
fn initial_state(data: &Dataset, spec: &ModelSpec, likelihood_on: bool) -> ParameterState {
    let n = data.len();
    let mut state = ParameterState::zeros(spec, n);
    if !likelihood_on {
        return state;
    }
    let m = data.total_observations();
    let mut x = DMatrix::zeros(m, 5);
    let mut y = nalgebra::DVector::zeros(m);
    let mut row = 0;
    for s in data.subjects() {
        let [sex, age, prevoi] = s.covariates();
        for (t, yv) in s.times().iter().zip(s.y()) {
            x[(row, 0)] = 1.0;
            x[(row, 1)] = *t;
            x[(row, 2)] = sex;
            x[(row, 3)] = age;
            x[(row, 4)] = prevoi;
            y[row] = *yv;
            row += 1;
        }
    }
    let mut xtx = x.transpose() * &x;
    for k in 0..5 {
        xtx[(k, k)] += 1e-8;
    }
    let xty = x.transpose() * &y;
    if let Some(chol) = nalgebra::Cholesky::new(xtx) {
        let beta = chol.solve(&xty);
        let resid = &y - &x * &beta;
        let mse = (resid.norm_squared() / m as f64).max(1e-4);
        for k in 0..5 {
            state.beta1[k] = beta[k];
        }
        let ls = 0.5 * mse.ln();
        if let Some(v) = state.log_sigma0.as_mut() {
            *v = ls;
        }
        if let Some(v) = state.log_sigma.as_mut() {
            v.iter_mut().for_each(|x| *x = ls);
        }
    }
    state
}

fn jitter_state(state: &mut ParameterState, rng: &mut ChaCha12Rng, attempt: usize) {
    let spread = 0.01 * attempt as f64;
    for v in state.beta1.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += spread * z;
    }
    if let Some(v) = state.log_sigma0.as_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += spread * z;
    }
    if let Some(ls) = state.log_sigma.as_mut() {
        for v in ls.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += spread * z;
        }
    }
}
