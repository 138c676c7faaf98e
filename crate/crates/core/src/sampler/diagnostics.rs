//! Chain diagnostics: autocorrelation-based effective sample size, Monte
//! Carlo standard errors, per-block acceptance rates and a split potential
//! scale reduction factor for multi-chain runs.

use crate::error::{Error, Result};
use crate::sampler::chain::{BlockStats, PosteriorChain};

/// Effective sample size by Geyer's initial monotone positive sequence.
/// Returns the estimate and a degeneracy flag (true when the series has no
/// variance to estimate from).
pub fn effective_sample_size(series: &[f64]) -> (f64, bool) {
    let n = series.len();
    if n < 4 {
        return (0.0, true);
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let c0 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    if !(c0 > 0.0) || !c0.is_finite() {
        return (0.0, true);
    }
    let autocov = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for t in 0..n - lag {
            acc += (series[t] - mean) * (series[t + lag] - mean);
        }
        acc / nf
    };
    // sum of paired autocovariances, truncated when a pair turns negative
    // and forced monotone nonincreasing
    let max_lag = n - 2;
    let mut sigma2 = -c0;
    let mut prev_pair = f64::INFINITY;
    let mut m = 0usize;
    loop {
        let l1 = 2 * m;
        let l2 = 2 * m + 1;
        if l2 > max_lag {
            break;
        }
        let mut pair = autocov(l1) + autocov(l2);
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev_pair);
        sigma2 += 2.0 * pair;
        prev_pair = pair;
        m += 1;
    }
    if !(sigma2 > 0.0) {
        return (nf, false);
    }
    (nf * c0 / sigma2, false)
}

/// Monte Carlo standard error of the series mean, from the effective
/// sample size.
pub fn mcse_mean(series: &[f64]) -> f64 {
    let (ess, degenerate) = effective_sample_size(series);
    if degenerate || ess <= 0.0 {
        return 0.0;
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (var / ess).sqrt()
}

/// Monte Carlo standard error of the series standard deviation
/// (delta-method approximation sd / sqrt(2 ess)).
pub fn mcse_sd(series: &[f64]) -> f64 {
    let (ess, degenerate) = effective_sample_size(series);
    if degenerate || ess <= 0.0 {
        return 0.0;
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (var / (2.0 * ess)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostic {
    pub name: String,
    pub ess: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub params: Vec<ParamDiagnostic>,
    pub blocks: Vec<BlockStats>,
    pub clamp_events: u64,
    pub numeric_rejections: u64,
}

/// Per-parameter effective sample sizes plus the sampler's block acceptance
/// and clamp counters. Requires at least 10 retained draws.
pub fn chain_diagnostics(chain: &PosteriorChain) -> Result<ChainDiagnostics> {
    if chain.n_draws() < 10 {
        return Err(Error::invalid(format!(
            "diagnostics need at least 10 draws, got {}",
            chain.n_draws()
        )));
    }
    let (names, rows) = chain.flattened_rows();
    let mut params = Vec::with_capacity(names.len());
    let mut column = vec![0.0; rows.len()];
    for (j, name) in names.iter().enumerate() {
        for (s, row) in rows.iter().enumerate() {
            column[s] = row[j];
        }
        let (ess, degenerate) = effective_sample_size(&column);
        params.push(ParamDiagnostic {
            name: name.clone(),
            ess,
            degenerate,
        });
    }
    Ok(ChainDiagnostics {
        params,
        blocks: chain.blocks.clone(),
        clamp_events: chain.clamp_events,
        numeric_rejections: chain.numeric_rejections,
    })
}

/// Split potential scale reduction factor over one parameter's series from
/// several chains. Values near 1 indicate agreement.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.is_empty() {
        return Err(Error::invalid("need at least one chain"));
    }
    let min_len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if min_len < 4 {
        return Err(Error::invalid("chains too short for split R-hat"));
    }
    let half = min_len / 2;
    let mut pieces: Vec<&[f64]> = Vec::new();
    for c in chains {
        pieces.push(&c[..half]);
        pieces.push(&c[half..2 * half]);
    }
    let m = pieces.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = pieces
        .iter()
        .map(|p| p.iter().sum::<f64>() / n)
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0)
        * means
            .iter()
            .map(|mu| (mu - grand) * (mu - grand))
            .sum::<f64>();
    let w = pieces
        .iter()
        .zip(&means)
        .map(|(p, mu)| p.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if !(w > 0.0) {
        // all pieces constant: identical chains agree perfectly
        return Ok(1.0);
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}
