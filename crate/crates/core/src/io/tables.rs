//! Derived tables: posterior summaries, time-varying coefficient curves
//! with credible bands, and the WAIC comparison table.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::fmt_float;
use crate::model::{Linking, SplineId};
use crate::sampler::PosteriorChain;
use crate::waic::WaicResult;

/// Linear-interpolation (type 7) empirical quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn summarize_series(values: &[f64]) -> (f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (
        mean,
        quantile_sorted(&sorted, 0.025),
        quantile_sorted(&sorted, 0.975),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub parameter: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Posterior mean and equal-tailed 95% interval for every scalar parameter,
/// plus the unique elements of the random-effects covariance (each
/// precision draw inverted before summarizing).
pub fn summarize(chain: &PosteriorChain) -> Result<Vec<SummaryRow>> {
    if chain.n_draws() < 2 {
        return Err(Error::invalid("summaries need at least two draws"));
    }
    let (names, rows) = chain.flattened_rows();
    let s = rows.len();
    let mut out = Vec::with_capacity(names.len() + 6);
    let mut column = vec![0.0; s];
    for (j, name) in names.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            column[i] = row[j];
        }
        let (mean, lo, hi) = summarize_series(&column);
        out.push(SummaryRow {
            parameter: name.clone(),
            mean,
            lo,
            hi,
        });
    }
    // derived covariance entries sigma_b_jk
    let p = chain.spec.random_effects_dim();
    let mut cov_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(s); p * (p + 1) / 2];
    for draw in &chain.draws {
        let cov = draw
            .sigma_inv
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numeric("a precision draw is not invertible"))?;
        let mut slot = 0;
        for j in 0..p {
            for k in j..p {
                cov_draws[slot].push(cov[(j, k)]);
                slot += 1;
            }
        }
    }
    let mut slot = 0;
    for j in 1..=p {
        for k in j..=p {
            let (mean, lo, hi) = summarize_series(&cov_draws[slot]);
            out.push(SummaryRow {
                parameter: format!("sigma_b_{j}_{k}"),
                mean,
                lo,
                hi,
            });
            slot += 1;
        }
    }
    Ok(out)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut out = String::from("parameter,mean,lo2.5,hi97.5\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.parameter,
            fmt_float(r.mean),
            fmt_float(r.lo),
            fmt_float(r.hi)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub g: String,
    pub label: String,
    pub t: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Pointwise posterior mean and 95% band of every link/baseline function
/// the spec defines, over a time grid; the g3 function additionally gets a
/// hazard-ratio curve (exponentiated draw by draw).
pub fn export_curves(chain: &PosteriorChain, grid: &[f64]) -> Result<Vec<CurveRow>> {
    if chain.n_draws() < 2 {
        return Err(Error::invalid("curves need at least two draws"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    let spec = &chain.spec;
    let mut out = Vec::new();
    let mut emit = |g: &str, label: &str, t: f64, values: &[f64]| {
        let (mean, lo, hi) = summarize_series(values);
        out.push(CurveRow {
            g: g.to_string(),
            label: label.to_string(),
            t,
            mean,
            lo,
            hi,
        });
    };
    let g3_label = match spec.linking {
        Linking::SharedB2 => "link_b2_effect",
        _ => "link_sigma_effect",
    };
    for id in SplineId::ALL {
        if spec.has_spline(id) {
            let basis = spec.spline_config(id).build()?;
            let label = match id {
                SplineId::G0 => "log_baseline_hazard",
                SplineId::G1 => "link_intercept_effect",
                SplineId::G2 => "link_slope_effect",
                SplineId::G3 => g3_label,
            };
            for &t in grid {
                let local = basis.eval_local(t)?;
                let values: Vec<f64> = chain
                    .draws
                    .iter()
                    .map(|d| {
                        let gamma = d.gamma[id.index()].as_ref().expect("consistent draw");
                        local
                            .values
                            .iter()
                            .enumerate()
                            .map(|(k, v)| v * gamma[local.offset + k])
                            .sum()
                    })
                    .collect();
                emit(id.name(), label, t, &values);
                if id == SplineId::G3 {
                    let hr: Vec<f64> = values.iter().map(|v| v.exp()).collect();
                    emit("g3", "hazard_ratio", t, &hr);
                }
            }
        }
    }
    if spec.linking == Linking::ConstantTraditional {
        for &t in grid {
            let g1: Vec<f64> = chain
                .draws
                .iter()
                .map(|d| d.g1_const.expect("consistent draw"))
                .collect();
            emit("g1", "link_intercept_effect", t, &g1);
            let g2: Vec<f64> = chain
                .draws
                .iter()
                .map(|d| d.g2_const.expect("consistent draw"))
                .collect();
            emit("g2", "link_slope_effect", t, &g2);
        }
    }
    Ok(out)
}

pub fn write_curves(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut out = String::from("g,label,t,mean,lo2.5,hi97.5\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.g,
            r.label,
            fmt_float(r.t),
            fmt_float(r.mean),
            fmt_float(r.lo),
            fmt_float(r.hi)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaicTableRow {
    pub index: usize,
    pub variance_model: String,
    pub linking: String,
    pub baseline: String,
    pub result: WaicResult,
}

/// The model-comparison table: one row per fitted model.
pub fn write_waic_table(rows: &[WaicTableRow], path: &Path) -> Result<()> {
    let mut out = String::from("model,variance_model,linking,baseline,lppd,p_waic,waic\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.index,
            r.variance_model,
            r.linking,
            r.baseline,
            fmt_float(r.result.lppd),
            fmt_float(r.result.p_waic),
            fmt_float(r.result.waic)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
