//! The model-spec configuration file: `key = value` lines with `#`
//! comments. Variant names match the engine's vocabulary exactly
//! (COVARIATE_DISPERSION, SHARED_SIGMA, PSPLINE, ...). The full schema is
//! documented in docs/formats.md.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::fmt_float;
use crate::model::{
    Baseline, Linking, ModelSpec, Sigma0Prior, SplineConfig, VarianceModel,
};

/// Parse a spec from a file.
pub fn parse_model_spec(path: &Path) -> Result<ModelSpec> {
    parse_model_spec_str(&fs::read_to_string(path)?)
}

/// Parse a spec from configuration text.
pub fn parse_model_spec_str(text: &str) -> Result<ModelSpec> {
    let mut seen: HashMap<String, (usize, String)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(lineno, format!("expected `key = value`, got {line:?}"))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::parse(lineno, format!("blank value for {key}")));
        }
        if seen.insert(key.clone(), (lineno, value)).is_some() {
            return Err(Error::parse(lineno, format!("duplicate key {key}")));
        }
    }

    let known = [
        "variance_model",
        "linking",
        "baseline",
        "link_t_min",
        "link_t_max",
        "link_intervals",
        "baseline_t_min",
        "baseline_t_max",
        "baseline_intervals",
        "piecewise_grid",
        "beta_variance",
        "wishart_scale_diag",
        "wishart_df",
        "gamma_smooth_shape",
        "gamma_smooth_rate",
        "gamma_lambda_shape",
        "gamma_lambda_rate",
        "sigma0_prior",
        "sigma0_log_uniform_bound",
        "sigma0_inv_gamma_eps",
        "sigma0_half_cauchy_scale_max",
        "first_coef_variance",
        "weibull_rho_shape",
        "weibull_rho_rate",
    ];
    for (key, (lineno, _)) in &seen {
        if !known.contains(&key.as_str()) {
            return Err(Error::parse(*lineno, format!("unknown key {key}")));
        }
    }

    let required = |key: &str| -> Result<(usize, String)> {
        seen.get(key)
            .cloned()
            .ok_or_else(|| Error::parse(0, format!("missing required key {key}")))
    };
    let (vl, vv) = required("variance_model")?;
    let variance_model = VarianceModel::parse(&vv)
        .ok_or_else(|| Error::parse(vl, format!("unknown variance_model {vv:?}")))?;
    let (ll, lv) = required("linking")?;
    let linking =
        Linking::parse(&lv).ok_or_else(|| Error::parse(ll, format!("unknown linking {lv:?}")))?;
    let (bl, bv) = required("baseline")?;
    let baseline =
        Baseline::parse(&bv).ok_or_else(|| Error::parse(bl, format!("unknown baseline {bv:?}")))?;

    let mut spec = ModelSpec::new(variance_model, linking, baseline);

    let float_of = |entry: &(usize, String), key: &str| -> Result<f64> {
        crate::io::parse_float(&entry.1, entry.0, key)
    };
    let usize_of = |entry: &(usize, String), key: &str| -> Result<usize> {
        entry.1.parse::<usize>().map_err(|_| {
            Error::parse(entry.0, format!("malformed {key}: {:?}", entry.1))
        })
    };
    let set_spline = |cfg: &mut SplineConfig,
                          prefix: &str,
                          seen: &HashMap<String, (usize, String)>|
     -> Result<()> {
        if let Some(e) = seen.get(&format!("{prefix}_t_min")) {
            cfg.t_min = float_of(e, "t_min")?;
        }
        if let Some(e) = seen.get(&format!("{prefix}_t_max")) {
            cfg.t_max = float_of(e, "t_max")?;
        }
        if let Some(e) = seen.get(&format!("{prefix}_intervals")) {
            cfg.num_intervals = usize_of(e, "intervals")?;
        }
        Ok(())
    };
    let mut link = spec.link_spline;
    set_spline(&mut link, "link", &seen)?;
    spec.link_spline = link;
    let mut base = spec.baseline_spline;
    set_spline(&mut base, "baseline", &seen)?;
    spec.baseline_spline = base;

    if let Some((lineno, grid)) = seen.get("piecewise_grid") {
        let mut parsed = Vec::new();
        for tok in grid.split(',') {
            let tok = tok.trim();
            let v = if tok == "inf" {
                f64::INFINITY
            } else {
                crate::io::parse_float(tok, *lineno, "piecewise_grid entry")?
            };
            parsed.push(v);
        }
        spec.piecewise_grid = parsed;
    }

    let pr = &mut spec.priors;
    if let Some(e) = seen.get("beta_variance") {
        pr.beta_variance = float_of(e, "beta_variance")?;
    }
    if let Some(e) = seen.get("wishart_scale_diag") {
        pr.wishart_scale_diag = float_of(e, "wishart_scale_diag")?;
    }
    if let Some(e) = seen.get("wishart_df") {
        pr.wishart_df = float_of(e, "wishart_df")?;
    }
    if let Some(e) = seen.get("gamma_smooth_shape") {
        pr.gamma_smooth.0 = float_of(e, "gamma_smooth_shape")?;
    }
    if let Some(e) = seen.get("gamma_smooth_rate") {
        pr.gamma_smooth.1 = float_of(e, "gamma_smooth_rate")?;
    }
    if let Some(e) = seen.get("gamma_lambda_shape") {
        pr.gamma_lambda.0 = float_of(e, "gamma_lambda_shape")?;
    }
    if let Some(e) = seen.get("gamma_lambda_rate") {
        pr.gamma_lambda.1 = float_of(e, "gamma_lambda_rate")?;
    }
    if let Some(e) = seen.get("first_coef_variance") {
        pr.first_coef_variance = float_of(e, "first_coef_variance")?;
    }
    if let Some(e) = seen.get("weibull_rho_shape") {
        pr.weibull_rho_prior.0 = float_of(e, "weibull_rho_shape")?;
    }
    if let Some(e) = seen.get("weibull_rho_rate") {
        pr.weibull_rho_prior.1 = float_of(e, "weibull_rho_rate")?;
    }
    if let Some((lineno, family)) = seen.get("sigma0_prior") {
        pr.sigma0_prior = match family.as_str() {
            "LOG_UNIFORM" => {
                let bound = match seen.get("sigma0_log_uniform_bound") {
                    Some(e) => float_of(e, "sigma0_log_uniform_bound")?,
                    None => 100.0,
                };
                Sigma0Prior::LogUniform { bound }
            }
            "INV_GAMMA" => {
                let eps = match seen.get("sigma0_inv_gamma_eps") {
                    Some(e) => float_of(e, "sigma0_inv_gamma_eps")?,
                    None => 0.001,
                };
                Sigma0Prior::InvGamma { eps }
            }
            "HALF_CAUCHY" => {
                let scale_max = match seen.get("sigma0_half_cauchy_scale_max") {
                    Some(e) => float_of(e, "sigma0_half_cauchy_scale_max")?,
                    None => 100.0,
                };
                Sigma0Prior::HalfCauchy { scale_max }
            }
            other => {
                return Err(Error::parse(
                    *lineno,
                    format!("unknown sigma0_prior {other:?}"),
                ))
            }
        };
    }
    Ok(spec)
}

/// Write a spec as configuration text (inverse of [`parse_model_spec`]).
pub fn write_model_spec(spec: &ModelSpec, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("variance_model = {}\n", spec.variance_model.name()));
    out.push_str(&format!("linking = {}\n", spec.linking.name()));
    out.push_str(&format!("baseline = {}\n", spec.baseline.name()));
    out.push_str(&format!("link_t_min = {}\n", fmt_float(spec.link_spline.t_min)));
    out.push_str(&format!("link_t_max = {}\n", fmt_float(spec.link_spline.t_max)));
    out.push_str(&format!("link_intervals = {}\n", spec.link_spline.num_intervals));
    out.push_str(&format!(
        "baseline_t_min = {}\n",
        fmt_float(spec.baseline_spline.t_min)
    ));
    out.push_str(&format!(
        "baseline_t_max = {}\n",
        fmt_float(spec.baseline_spline.t_max)
    ));
    out.push_str(&format!(
        "baseline_intervals = {}\n",
        spec.baseline_spline.num_intervals
    ));
    let grid: Vec<String> = spec
        .piecewise_grid
        .iter()
        .map(|v| {
            if v.is_infinite() {
                "inf".to_string()
            } else {
                fmt_float(*v)
            }
        })
        .collect();
    out.push_str(&format!("piecewise_grid = {}\n", grid.join(",")));
    let pr = &spec.priors;
    out.push_str(&format!("beta_variance = {}\n", fmt_float(pr.beta_variance)));
    out.push_str(&format!(
        "wishart_scale_diag = {}\n",
        fmt_float(pr.wishart_scale_diag)
    ));
    out.push_str(&format!("wishart_df = {}\n", fmt_float(pr.wishart_df)));
    out.push_str(&format!(
        "gamma_smooth_shape = {}\n",
        fmt_float(pr.gamma_smooth.0)
    ));
    out.push_str(&format!(
        "gamma_smooth_rate = {}\n",
        fmt_float(pr.gamma_smooth.1)
    ));
    out.push_str(&format!(
        "gamma_lambda_shape = {}\n",
        fmt_float(pr.gamma_lambda.0)
    ));
    out.push_str(&format!(
        "gamma_lambda_rate = {}\n",
        fmt_float(pr.gamma_lambda.1)
    ));
    out.push_str(&format!(
        "first_coef_variance = {}\n",
        fmt_float(pr.first_coef_variance)
    ));
    out.push_str(&format!(
        "weibull_rho_shape = {}\n",
        fmt_float(pr.weibull_rho_prior.0)
    ));
    out.push_str(&format!(
        "weibull_rho_rate = {}\n",
        fmt_float(pr.weibull_rho_prior.1)
    ));
    match pr.sigma0_prior {
        Sigma0Prior::LogUniform { bound } => {
            out.push_str("sigma0_prior = LOG_UNIFORM\n");
            out.push_str(&format!(
                "sigma0_log_uniform_bound = {}\n",
                fmt_float(bound)
            ));
        }
        Sigma0Prior::InvGamma { eps } => {
            out.push_str("sigma0_prior = INV_GAMMA\n");
            out.push_str(&format!("sigma0_inv_gamma_eps = {}\n", fmt_float(eps)));
        }
        Sigma0Prior::HalfCauchy { scale_max } => {
            out.push_str("sigma0_prior = HALF_CAUCHY\n");
            out.push_str(&format!(
                "sigma0_half_cauchy_scale_max = {}\n",
                fmt_float(scale_max)
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}
