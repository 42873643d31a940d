//! Cost-function abstraction and the concrete cost library.
//!
//! A [`Cost`] exposes a value and an analytic gradient on `R^n`, an optional
//! global Lipschitz bound for the gradient (used by the Lyapunov constants),
//! and the set of points where the gradient formula degenerates (used by
//! finite-difference checks to keep away).

use nalgebra::DVector;
use std::sync::Arc;
use thiserror::Error;

mod huber;
mod library;
mod minimize;

pub use huber::{huber_deriv, huber_scalar, HuberCost, HuberSpec};
pub use library::{example1_costs, CosLogNorm, NormPower, Quadratic, SineNorm, SqrtScaledSquare};
pub use minimize::{centralized_minimizer, grid_starts, MinimizeError, MinimizeOptions};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("cost dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot build a global cost from an empty list")]
    EmptySum,

    #[error("huber tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),

    #[error("huber data set must be nonempty")]
    EmptyData,
}

/// A differentiable (or almost-everywhere differentiable) cost on `R^n`.
///
/// Implementations must be immutable and reentrant; they are shared freely
/// across threads as `Arc<dyn Cost>`.
pub trait Cost: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, s: &DVector<f64>) -> f64;

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64>;

    /// Global Lipschitz bound for the gradient, when one is declared.
    ///
    /// For costs whose gradient is Lipschitz only away from isolated singular
    /// points, the hint is the bound valid outside the radius-1/2 balls around
    /// [`Cost::singular_points`].
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Centers near which the gradient is discontinuous, unbounded, or not
    /// Lipschitz. Finite-difference and Lipschitz spot checks exclude a
    /// neighborhood of these.
    fn singular_points(&self) -> Vec<DVector<f64>> {
        Vec::new()
    }
}

pub type SharedCost = Arc<dyn Cost>;

/// Sum of local costs: value and gradient are the sums of the locals.
pub struct SumCost {
    terms: Vec<SharedCost>,
    dim: usize,
}

impl SumCost {
    pub fn new(terms: Vec<SharedCost>) -> Result<Self, CostError> {
        let dim = terms.first().ok_or(CostError::EmptySum)?.dim();
        for t in &terms {
            if t.dim() != dim {
                return Err(CostError::DimensionMismatch {
                    expected: dim,
                    got: t.dim(),
                });
            }
        }
        Ok(Self { terms, dim })
    }
}

impl Cost for SumCost {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        self.terms.iter().map(|t| t.value(s)).sum()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for t in &self.terms {
            g += t.gradient(s);
        }
        g
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.terms
            .iter()
            .map(|t| t.lipschitz_hint())
            .sum::<Option<f64>>()
    }

    fn singular_points(&self) -> Vec<DVector<f64>> {
        self.terms
            .iter()
            .flat_map(|t| t.singular_points())
            .collect()
    }
}

/// Builds the global cost `f(s) = Σ_i f_i(s)`.
pub fn global_cost(costs: &[SharedCost]) -> Result<SumCost, CostError> {
    SumCost::new(costs.to_vec())
}

/// Result of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    /// Worst relative error over all checked points and coordinates.
    pub max_relative_error: f64,
    /// Point and coordinate attaining the worst error.
    pub worst_point: Option<(DVector<f64>, usize)>,
    pub points_checked: usize,
}

/// Compares the analytic gradient against central finite differences of the
/// value at each point, per coordinate, and reports the maximum relative
/// error `|g_k - fd_k| / max(1, |g|)`.
pub fn gradient_check(cost: &dyn Cost, points: &[DVector<f64>], h: f64) -> GradientCheckReport {
    let mut max_relative_error = 0.0f64;
    let mut worst_point = None;
    for p in points {
        let g = cost.gradient(p);
        let scale = g.norm().max(1.0);
        for k in 0..cost.dim() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (cost.value(&plus) - cost.value(&minus)) / (2.0 * h);
            let rel = (g[k] - fd).abs() / scale;
            if rel > max_relative_error {
                max_relative_error = rel;
                worst_point = Some((p.clone(), k));
            }
        }
    }
    GradientCheckReport {
        max_relative_error,
        worst_point,
        points_checked: points.len(),
    }
}

/// True if `p` is within `radius` of any declared singular point of `cost`.
pub fn near_singular(cost: &dyn Cost, p: &DVector<f64>, radius: f64) -> bool {
    cost.singular_points().iter().any(|c| (p - c).norm() < radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn sum_of_two_quadratics() {
        let q = |c: DVector<f64>| -> SharedCost { Arc::new(Quadratic::new(2.0, c)) };
        let sum = global_cost(&[q(dvector![1.0, 1.0]), q(dvector![1.0, 1.0])]).unwrap();
        let s = dvector![2.0, 3.0];
        // 2 * 2 ||s - c||^2 = 4 * (1 + 4)
        assert_eq!(sum.value(&s), 20.0);
        assert_eq!(sum.gradient(&s), dvector![8.0, 16.0]);
        assert_eq!(sum.lipschitz_hint(), Some(8.0));
    }

    #[test]
    fn empty_sum_rejected() {
        assert!(matches!(global_cost(&[]), Err(CostError::EmptySum)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a: SharedCost = Arc::new(Quadratic::new(1.0, dvector![0.0, 0.0]));
        let b: SharedCost = Arc::new(Quadratic::new(1.0, dvector![0.0]));
        assert!(matches!(
            global_cost(&[a, b]),
            Err(CostError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_check_quadratic_is_exact() {
        let q = Quadratic::new(2.0, dvector![3.0, 5.0]);
        let pts: Vec<_> = (0..20)
            .map(|k| dvector![(k as f64) * 0.37 - 4.0, (k as f64) * 0.53 - 3.0])
            .collect();
        let report = gradient_check(&q, &pts, 1e-5);
        assert!(
            report.max_relative_error < 1e-8,
            "relative error {}",
            report.max_relative_error
        );
    }
}
