//! Widely applicable information criterion from a pointwise log-likelihood
//! matrix: WAIC = -2 (lppd - p_waic), smaller is better.

use crate::error::{Error, Result};

/// S x N matrix of per-draw, per-subject log-likelihood values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LoglikMatrix {
    n_draws: usize,
    n_subjects: usize,
    values: Vec<f64>,
}

impl LoglikMatrix {
    pub fn new(n_draws: usize, n_subjects: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_draws * n_subjects {
            return Err(Error::invalid(format!(
                "matrix claims {n_draws} x {n_subjects} but holds {} values",
                values.len()
            )));
        }
        Ok(LoglikMatrix {
            n_draws,
            n_subjects,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_draws = rows.len();
        let n_subjects = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_subjects) {
            return Err(Error::invalid("ragged pointwise log-likelihood rows"));
        }
        let values = rows.iter().flatten().copied().collect();
        LoglikMatrix::new(n_draws, n_subjects, values)
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn get(&self, draw: usize, subject: usize) -> f64 {
        self.values[draw * self.n_subjects + subject]
    }

    pub fn row(&self, draw: usize) -> &[f64] {
        &self.values[draw * self.n_subjects..(draw + 1) * self.n_subjects]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The column of one subject across draws.
    pub fn column(&self, subject: usize) -> Vec<f64> {
        (0..self.n_draws).map(|s| self.get(s, subject)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaicResult {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// Compute lppd, p_waic and WAIC.
///
/// lppd sums, over subjects, the log of the posterior-mean likelihood
/// (computed with a max-shifted log-sum-exp); p_waic sums the S-1
/// denominator sample variances of the pointwise log-likelihoods.
pub fn compute_waic(pointwise: &LoglikMatrix) -> Result<WaicResult> {
    let s = pointwise.n_draws();
    let n = pointwise.n_subjects();
    if s < 2 {
        return Err(Error::invalid(format!(
            "WAIC needs at least two draws, got {s}"
        )));
    }
    if let Some(bad) = pointwise.values().iter().find(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "pointwise log-likelihood contains non-finite value {bad}"
        )));
    }
    let s_f = s as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for draw in 0..s {
            max = max.max(pointwise.get(draw, i));
        }
        let mut sum_exp = 0.0;
        let mut mean = 0.0;
        for draw in 0..s {
            let v = pointwise.get(draw, i);
            sum_exp += (v - max).exp();
            mean += v;
        }
        mean /= s_f;
        lppd += max + (sum_exp / s_f).ln();
        let mut ss = 0.0;
        for draw in 0..s {
            let d = pointwise.get(draw, i) - mean;
            ss += d * d;
        }
        p_waic += ss / (s_f - 1.0);
    }
    Ok(WaicResult {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> LoglikMatrix {
        LoglikMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn degenerate_two_draw_example() {
        let m = matrix(&[&[-1.0], &[-1.0]]);
        let r = compute_waic(&m).unwrap();
        assert_eq!(r.lppd, -1.0);
        assert_eq!(r.p_waic, 0.0);
        assert_eq!(r.waic, 2.0);
    }

    #[test]
    fn hand_computed_example() {
        let m = matrix(&[&[0.0], &[-2.0]]);
        let r = compute_waic(&m).unwrap();
        let lppd = ((1.0 + (-2.0_f64).exp()) / 2.0).ln();
        assert!((r.lppd - lppd).abs() < 1e-12);
        assert!((r.lppd + 0.566219).abs() < 1e-6);
        assert!((r.p_waic - 2.0).abs() < 1e-12);
        assert!((r.waic - 5.132438).abs() < 1e-5);
    }

    #[test]
    fn additive_over_subjects() {
        let m = matrix(&[&[-1.0, -3.0], &[-2.0, -1.5], &[-0.5, -2.5]]);
        let both = compute_waic(&m).unwrap();
        let a = compute_waic(&matrix(&[&[-1.0], &[-2.0], &[-0.5]])).unwrap();
        let b = compute_waic(&matrix(&[&[-3.0], &[-1.5], &[-2.5]])).unwrap();
        assert!((both.waic - (a.waic + b.waic)).abs() < 1e-12);
        assert!((both.lppd - (a.lppd + b.lppd)).abs() < 1e-12);
        assert!((both.p_waic - (a.p_waic + b.p_waic)).abs() < 1e-12);
    }

    #[test]
    fn errors_on_bad_input() {
        let one_draw = matrix(&[&[-1.0, -2.0]]);
        assert!(compute_waic(&one_draw).is_err());
        let inf = matrix(&[&[-1.0], &[f64::INFINITY]]);
        assert!(matches!(compute_waic(&inf), Err(Error::Numeric(_))));
        assert!(LoglikMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn dyadic_constant_shift_is_exact() {
        // values and shift chosen so every float operation is exact
        let m = matrix(&[&[-1.0, -2.0], &[-0.5, -3.0], &[-1.5, -2.5], &[-2.0, -4.0]]);
        let c = 0.5;
        let shifted_rows: Vec<Vec<f64>> = (0..4)
            .map(|s| m.row(s).iter().map(|v| v + c).collect())
            .collect();
        let shifted = LoglikMatrix::from_rows(&shifted_rows).unwrap();
        let base = compute_waic(&m).unwrap();
        let after = compute_waic(&shifted).unwrap();
        let n = 2.0;
        assert_eq!(after.lppd, base.lppd + n * c);
        assert_eq!(after.p_waic, base.p_waic);
        assert_eq!(after.waic, base.waic - 2.0 * n * c);
    }

    #[test]
    fn matches_naive_implementation_when_it_does_not_underflow() {
        let mut seed = 2024u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let s = 50;
            let n = 20;
            let rows: Vec<Vec<f64>> = (0..s)
                .map(|_| (0..n).map(|_| -5.0 * next()).collect())
                .collect();
            let m = LoglikMatrix::from_rows(&rows).unwrap();
            let r = compute_waic(&m).unwrap();

            // naive: direct mean of exponentials, no stabilization
            let mut lppd = 0.0;
            let mut p_waic = 0.0;
            for i in 0..n {
                let col: Vec<f64> = (0..s).map(|d| rows[d][i]).collect();
                lppd += (col.iter().map(|v| v.exp()).sum::<f64>() / s as f64).ln();
                let mean = col.iter().sum::<f64>() / s as f64;
                p_waic +=
                    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (s as f64 - 1.0);
            }
            let naive = -2.0 * (lppd - p_waic);
            assert!((r.waic - naive).abs() < 1e-10);
        }
    }

    #[test]
    fn permutation_invariance() {
        let m = matrix(&[&[-1.0, -3.0, -2.0], &[-2.0, -1.5, -0.7], &[-0.5, -2.5, -1.1]]);
        let cols_swapped = matrix(&[&[-3.0, -1.0, -2.0], &[-1.5, -2.0, -0.7], &[-2.5, -0.5, -1.1]]);
        let rows_swapped = matrix(&[&[-0.5, -2.5, -1.1], &[-1.0, -3.0, -2.0], &[-2.0, -1.5, -0.7]]);
        let base = compute_waic(&m).unwrap();
        assert_eq!(base, compute_waic(&cols_swapped).unwrap());
        assert_eq!(base, compute_waic(&rows_swapped).unwrap());
    }

    #[test]
    fn stable_in_the_underflow_regime() {
        // magnitudes where the naive path would underflow to -inf
        let m = matrix(&[&[-800.0], &[-801.0]]);
        let r = compute_waic(&m).unwrap();
        assert!(r.lppd.is_finite());
        assert!((r.lppd - (-800.0 + ((1.0 + (-1.0_f64).exp()) / 2.0).ln())).abs() < 1e-9);
    }
}
