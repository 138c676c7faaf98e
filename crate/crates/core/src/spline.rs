//! Cubic B-spline bases on equally spaced knots, with the first-difference
//! penalty and random-walk prior used for every time-varying coefficient
//! function and for the log baseline hazard.
//!
//! The basis is the uniform one: the knot grid over `[t_min, t_max]` is
//! extended by three extra knots on each side so that all Q = s + 3 basis
//! functions have the same shape, including at the boundaries. Evaluation is
//! defined only on `[t_min, t_max]`.

use crate::error::{Error, Result};
use crate::math::{ln_normal_pdf, LN_2PI};

/// Spline order (cubic).
pub const SPLINE_ORDER: usize = 3;

/// Cubic B-spline basis over `s` equal-width intervals on `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    t_min: f64,
    t_max: f64,
    num_intervals: usize,
    step: f64,
    /// Extended knot sequence: `s + 7` equally spaced knots starting at
    /// `t_min - 3h`; positions 3..=s+3 are the domain knots.
    knots: Vec<f64>,
}

/// The four basis values that are nonzero at one evaluation point,
/// together with the index of the first of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBasis {
    pub offset: usize,
    pub values: [f64; 4],
}

impl SplineBasis {
    /// Build a cubic basis with `Q = s + 3` functions.
    pub fn new(t_min: f64, t_max: f64, s: usize) -> Result<Self> {
        if !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::invalid("spline bounds must be finite"));
        }
        if t_max <= t_min {
            return Err(Error::invalid(format!(
                "spline domain requires t_max > t_min, got [{t_min}, {t_max}]"
            )));
        }
        if s == 0 {
            return Err(Error::invalid("spline needs at least one interval"));
        }
        let step = (t_max - t_min) / s as f64;
        let knots = (0..s + 7)
            .map(|j| t_min + (j as f64 - 3.0) * step)
            .collect();
        Ok(SplineBasis {
            t_min,
            t_max,
            num_intervals: s,
            step,
            knots,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn num_intervals(&self) -> usize {
        self.num_intervals
    }

    /// Number of basis functions, Q = s + 3.
    pub fn num_basis(&self) -> usize {
        self.num_intervals + SPLINE_ORDER
    }

    pub fn knot_step(&self) -> f64 {
        self.step
    }

    /// The extended knot sequence (s + 7 knots).
    pub fn extended_knots(&self) -> &[f64] {
        &self.knots
    }

    /// The s + 1 domain knots from `t_min` to `t_max`.
    pub fn domain_knots(&self) -> &[f64] {
        &self.knots[3..=self.num_intervals + 3]
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.t_min || t > self.t_max {
            return Err(Error::domain(format!(
                "t={t} outside spline domain [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    /// Evaluate the four nonzero basis functions at `t`.
    pub fn eval_local(&self, t: f64) -> Result<LocalBasis> {
        self.check_domain(t)?;
        let rel = (t - self.t_min) / self.step;
        let cell = (rel.floor() as usize).min(self.num_intervals - 1);
        let u = rel - cell as f64;
        let omu = 1.0 - u;
        let u2 = u * u;
        let u3 = u2 * u;
        // Uniform cubic B-spline segment polynomials; they sum to 1 for any u.
        let values = [
            omu * omu * omu / 6.0,
            (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
            (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
            u3 / 6.0,
        ];
        Ok(LocalBasis {
            offset: cell,
            values,
        })
    }

    /// Evaluate all Q basis functions at `t` (at most four are nonzero).
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let local = self.eval_local(t)?;
        let mut out = vec![0.0; self.num_basis()];
        for (k, v) in local.values.iter().enumerate() {
            out[local.offset + k] = *v;
        }
        Ok(out)
    }

    /// Evaluate the spline `sum_q gamma_q B_q(t)`.
    pub fn eval_spline(&self, gamma: &[f64], t: f64) -> Result<f64> {
        if gamma.len() != self.num_basis() {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, basis has {} functions",
                gamma.len(),
                self.num_basis()
            )));
        }
        let local = self.eval_local(t)?;
        Ok(local
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * gamma[local.offset + k])
            .sum())
    }
}

/// First-order difference matrix D of shape (Q-1) x Q: row r has -1 in
/// column r and +1 in column r + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    q: usize,
    entries: Vec<i64>,
}

impl DifferenceMatrix {
    pub fn rows(&self) -> usize {
        self.q - 1
    }

    pub fn cols(&self) -> usize {
        self.q
    }

    pub fn entry(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.q + c]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// Apply D to a vector, yielding the Q-1 adjacent differences.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.q {
            return Err(Error::invalid("vector length must equal Q"));
        }
        Ok((1..self.q).map(|i| v[i] - v[i - 1]).collect())
    }
}

/// Build the first-order difference matrix for Q coefficients.
pub fn difference_matrix(q: usize) -> Result<DifferenceMatrix> {
    if q < 2 {
        return Err(Error::invalid("difference matrix needs Q >= 2"));
    }
    let mut entries = vec![0i64; (q - 1) * q];
    for r in 0..q - 1 {
        entries[r * q + r] = -1;
        entries[r * q + r + 1] = 1;
    }
    Ok(DifferenceMatrix { q, entries })
}

/// Penalty matrix P = D'D: symmetric positive-semidefinite, rank Q-1,
/// with the constant vector in its null space.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    q: usize,
    entries: Vec<i64>,
}

impl PenaltyMatrix {
    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn entry(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.q + c]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// gamma' P gamma, equal to the sum of squared adjacent differences.
    pub fn quadratic_form(&self, gamma: &[f64]) -> Result<f64> {
        if gamma.len() != self.q {
            return Err(Error::invalid("vector length must equal Q"));
        }
        let mut acc = 0.0;
        for r in 0..self.q {
            let mut row = 0.0;
            for c in 0..self.q {
                row += self.entries[r * self.q + c] as f64 * gamma[c];
            }
            acc += gamma[r] * row;
        }
        Ok(acc)
    }
}

/// P = D'D from a difference matrix.
pub fn penalty_matrix(d: &DifferenceMatrix) -> PenaltyMatrix {
    let q = d.cols();
    let mut entries = vec![0i64; q * q];
    for r in 0..q {
        for c in 0..q {
            let mut acc = 0i64;
            for k in 0..d.rows() {
                acc += d.entry(k, r) * d.entry(k, c);
            }
            entries[r * q + c] = acc;
        }
    }
    PenaltyMatrix { q, entries }
}

/// Log density of the first-order random-walk prior on a coefficient vector:
/// the first coefficient is Gaussian with mean zero and `first_coef_variance`,
/// and each subsequent one is Gaussian around its predecessor with variance
/// `tau2`.
pub fn log_rw1_prior(gamma: &[f64], tau2: f64, first_coef_variance: f64) -> Result<f64> {
    if gamma.len() < 2 {
        return Err(Error::invalid("random-walk prior needs Q >= 2"));
    }
    if !(tau2 > 0.0) || !tau2.is_finite() {
        return Err(Error::invalid(format!("tau2 must be positive, got {tau2}")));
    }
    if !(first_coef_variance > 0.0) {
        return Err(Error::invalid("first_coef_variance must be positive"));
    }
    let mut lp = ln_normal_pdf(gamma[0], 0.0, first_coef_variance);
    let mut ss = 0.0;
    for q in 1..gamma.len() {
        let d = gamma[q] - gamma[q - 1];
        ss += d * d;
    }
    let m = (gamma.len() - 1) as f64;
    lp += -0.5 * m * (LN_2PI + tau2.ln()) - ss / (2.0 * tau2);
    Ok(lp)
}

/// Sum of squared adjacent differences, the sufficient statistic of the
/// random-walk prior.
pub fn rw1_sum_sq(gamma: &[f64]) -> f64 {
    (1..gamma.len())
        .map(|q| {
            let d = gamma[q] - gamma[q - 1];
            d * d
        })
        .sum()
}
