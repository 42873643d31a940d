//! Huber losses for robust distributed parameter estimation.
//!
//! The scalar Huber loss with tolerance `ς > 0` is quadratic for residuals up
//! to `ς` and linear beyond, which keeps it continuously differentiable while
//! damping the influence of outliers. A sensor's cost over its measurement
//! set `Q_i = {Q_ij}` is
//!
//! ```text
//! f_i(s) = ‖ Σ_j H(Q_ij, s) ‖₁
//! ```
//!
//! with `H` applied componentwise. Since `H ≥ 0`, the outer l1 norm is a sum
//! of nonnegative coordinate totals almost everywhere; the subgradient
//! selection `sign(0) = 0` is used at the (measure-zero) kinks.

use nalgebra::DVector;

use super::{Cost, CostError};

/// Scalar Huber loss: `(q-s)²/2` for `|q-s| ≤ ς`, else `ς|q-s| - ς²/2`.
pub fn huber_scalar(q: f64, s: f64, varsigma: f64) -> Result<f64, CostError> {
    if varsigma <= 0.0 {
        return Err(CostError::NonPositiveTolerance(varsigma));
    }
    let r = q - s;
    Ok(if r.abs() <= varsigma {
        0.5 * r * r
    } else {
        varsigma * r.abs() - 0.5 * varsigma * varsigma
    })
}

/// Derivative of [`huber_scalar`] with respect to `s`: `-clamp(q-s, ±ς)`.
pub fn huber_deriv(q: f64, s: f64, varsigma: f64) -> f64 {
    -(q - s).clamp(-varsigma, varsigma)
}

/// A sensor's measurement set and Huber tolerance.
#[derive(Debug, Clone)]
pub struct HuberSpec {
    varsigma: f64,
    data: Vec<DVector<f64>>,
}

impl HuberSpec {
    pub fn new(varsigma: f64, data: Vec<DVector<f64>>) -> Result<Self, CostError> {
        if varsigma <= 0.0 {
            return Err(CostError::NonPositiveTolerance(varsigma));
        }
        if data.is_empty() {
            return Err(CostError::EmptyData);
        }
        let dim = data[0].len();
        for q in &data {
            if q.len() != dim {
                return Err(CostError::DimensionMismatch {
                    expected: dim,
                    got: q.len(),
                });
            }
        }
        Ok(Self { varsigma, data })
    }

    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    pub fn data(&self) -> &[DVector<f64>] {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data[0].len()
    }
}

/// `f(s) = ‖Σ_j H(Q_j, s)‖₁` with componentwise Huber losses.
pub struct HuberCost {
    spec: HuberSpec,
}

impl HuberCost {
    pub fn new(spec: HuberSpec) -> Self {
        Self { spec }
    }

    /// Componentwise totals `T_k = Σ_j H(Q_jk, s_k)`; `T_k ≥ 0` always.
    fn totals(&self, s: &DVector<f64>) -> DVector<f64> {
        let n = self.spec.dim();
        let c = self.spec.varsigma;
        let mut t = DVector::zeros(n);
        for q in &self.spec.data {
            for k in 0..n {
                let r = q[k] - s[k];
                t[k] += if r.abs() <= c {
                    0.5 * r * r
                } else {
                    c * r.abs() - 0.5 * c * c
                };
            }
        }
        t
    }
}

impl Cost for HuberCost {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        self.totals(s).iter().map(|t| t.abs()).sum()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        // Single pass accumulating both the coordinate totals (for the outer
        // sign) and the inner derivative sums; this sits in the simulation
        // hot loop.
        let n = self.spec.dim();
        let c = self.spec.varsigma;
        let mut t = DVector::<f64>::zeros(n);
        let mut g = DVector::<f64>::zeros(n);
        for q in &self.spec.data {
            for k in 0..n {
                let r = q[k] - s[k];
                t[k] += if r.abs() <= c {
                    0.5 * r * r
                } else {
                    c * r.abs() - 0.5 * c * c
                };
                g[k] -= r.clamp(-c, c);
            }
        }
        for k in 0..n {
            // sign(0) = 0: the minimal-norm subgradient at the kink.
            g[k] *= t[k].signum() * f64::from(t[k] != 0.0);
        }
        g
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // Each coordinate's derivative is a sum of clamps with unit slope,
        // so the gradient is Lipschitz with the measurement count.
        Some(self.spec.data.len() as f64)
    }
}
