//! Fixed 15-point Gauss-Kronrod quadrature on a finite interval.
//!
//! The rule is the 7-point Gauss rule extended with 8 Kronrod points; it is
//! exact for polynomials up to degree 22. Node/weight constants are embedded
//! verbatim so results are bit-stable across builds.

use crate::error::{Error, Result};

/// The 15 quadrature nodes on (-1, 1): the 7 Gauss points first, then the
/// 8 Kronrod extension points.
pub const GK15_NODES: [f64; 15] = [
    -0.949107912342758524526189684047851,
    -0.741531185599394439863864773280788,
    -0.405845151377397166906606412076961,
    0.0,
    0.405845151377397166906606412076961,
    0.741531185599394439863864773280788,
    0.949107912342758524526189684047851,
    -0.991455371120812639206854697526329,
    -0.864864423359769072789712788640926,
    -0.586087235467691130294144838258730,
    -0.207784955007898467600689403773245,
    0.207784955007898467600689403773245,
    0.586087235467691130294144838258730,
    0.864864423359769072789712788640926,
    0.991455371120812639206854697526329,
];

/// Weights aligned with [`GK15_NODES`].
pub const GK15_WEIGHTS: [f64; 15] = [
    0.063092092629978553290700663189204,
    0.140653259715525918745189590510238,
    0.190350578064785409913256402421014,
    0.209482141084727828012999174891714,
    0.190350578064785409913256402421014,
    0.140653259715525918745189590510238,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
    0.104790010322250183839876322541518,
    0.169004726639267902826583426598550,
    0.204432940075298892414161999234649,
    0.204432940075298892414161999234649,
    0.169004726639267902826583426598550,
    0.104790010322250183839876322541518,
    0.022935322010529224963732008058970,
];

/// A 15-point Gauss-Kronrod rule (nodes on (-1,1) with positive weights).
#[derive(Debug, Clone, PartialEq)]
pub struct Gk15Rule {
    pub nodes: [f64; 15],
    pub weights: [f64; 15],
}

impl Gk15Rule {
    /// The standard rule with the embedded constants.
    pub fn standard() -> Self {
        Gk15Rule {
            nodes: GK15_NODES,
            weights: GK15_WEIGHTS,
        }
    }

    /// Integrate `f` over `[a, b]` with a single panel.
    ///
    /// Maps each node through `t = (b-a)/2 * node + (b+a)/2` and returns the
    /// weighted sum scaled by `(b-a)/2`. Returns 0 when `a == b`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("integration bounds must be finite"));
        }
        if a > b {
            return Err(Error::invalid(format!(
                "integration requires a <= b, got a={a}, b={b}"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (node, weight) in self.nodes.iter().zip(self.weights.iter()) {
            let t = half * node + mid;
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::numeric(format!(
                    "integrand returned non-finite value {v} at node t={t}"
                )));
            }
            acc += weight * v;
        }
        Ok(half * acc)
    }

    /// Integrate over `[a, b]` split into `panels` equal sub-intervals.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> Result<f64> {
        if panels == 0 {
            return Err(Error::invalid("panel count must be >= 1"));
        }
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            total += self.integrate(&mut f, lo, hi)?;
        }
        Ok(total)
    }
}

/// Single-panel 15-point Gauss-Kronrod integration with the standard rule.
pub fn gk15_integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    Gk15Rule::standard().integrate(f, a, b)
}
