//! The benchmark cost library: the five nonconvex/convex costs over `R²`
//! and the ingredients they are built from.
//!
//! All five are radial functions of a shifted argument `u = s - center`
//! (centers are stored negated relative to the usual `s + c` notation, i.e.
//! `SineNorm::new(5.0, dvector![-4.0, -5.0])` is `5 sin(‖s + [4,5]ᵀ‖)`).

use nalgebra::{dvector, DVector};

use super::Cost;

/// Norm floor used before taking logarithms in [`CosLogNorm`]; keeps the
/// value and gradient finite at the singular center.
pub const LOG_NORM_FLOOR: f64 = 1e-9;

/// `amplitude · sin(‖s - center‖)`.
///
/// The gradient `amplitude · cos(r) · u/r` has no limit at `u = 0`; it is
/// defined as zero there, which keeps the flow finite. The declared Lipschitz
/// hint is valid outside the radius-1/2 ball around the center.
pub struct SineNorm {
    amplitude: f64,
    center: DVector<f64>,
}

impl SineNorm {
    pub fn new(amplitude: f64, center: DVector<f64>) -> Self {
        Self { amplitude, center }
    }
}

impl Cost for SineNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        self.amplitude * (s - &self.center).norm().sin()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        let u = s - &self.center;
        let r = u.norm();
        if r == 0.0 {
            return DVector::zeros(self.dim());
        }
        u * (self.amplitude * r.cos() / r)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // Hessian norm is at most amplitude · max(1, 1/r) outside the
        // exclusion radius 1/2, and antipodal pairs straddling the center
        // attain a secant slope of 2·amplitude exactly; 10% headroom on top.
        Some(2.2 * self.amplitude.abs())
    }

    fn singular_points(&self) -> Vec<DVector<f64>> {
        vec![self.center.clone()]
    }
}

/// `amplitude · cos(ln ‖s - center‖)`, with the norm clamped below
/// [`LOG_NORM_FLOOR`].
pub struct CosLogNorm {
    amplitude: f64,
    center: DVector<f64>,
}

impl CosLogNorm {
    pub fn new(amplitude: f64, center: DVector<f64>) -> Self {
        Self { amplitude, center }
    }
}

impl Cost for CosLogNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        let r = (s - &self.center).norm().max(LOG_NORM_FLOOR);
        self.amplitude * r.ln().cos()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        let u = s - &self.center;
        let r = u.norm().max(LOG_NORM_FLOOR);
        u * (-self.amplitude * r.ln().sin() / (r * r))
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // Hessian norm is bounded by amplitude · √2 / r²; r ≥ 1/2 gives 4√2·amplitude.
        Some(4.0 * std::f64::consts::SQRT_2 * self.amplitude.abs() * 1.05)
    }

    fn singular_points(&self) -> Vec<DVector<f64>> {
        vec![self.center.clone()]
    }
}

/// `scale · ‖s - center‖^power` with `power > 1`.
///
/// The gradient `scale · power · r^{power-2} · u` tends to zero at the center
/// whenever `power > 1`, and is defined as zero there.
pub struct NormPower {
    scale: f64,
    power: f64,
    center: DVector<f64>,
}

impl NormPower {
    pub fn new(scale: f64, power: f64, center: DVector<f64>) -> Self {
        assert!(power > 1.0, "NormPower requires power > 1");
        Self {
            scale,
            power,
            center,
        }
    }
}

impl Cost for NormPower {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        self.scale * (s - &self.center).norm().powf(self.power)
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        let u = s - &self.center;
        let r = u.norm();
        if r == 0.0 {
            return DVector::zeros(self.dim());
        }
        u * (self.scale * self.power * r.powf(self.power - 2.0))
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        if self.power >= 2.0 {
            return None;
        }
        // For 1 < power < 2 the Hessian norm is scale·power·r^{power-2},
        // decreasing in r; evaluated at the exclusion radius 1/2.
        Some(self.scale.abs() * self.power * 0.5f64.powf(self.power - 2.0) * 1.01)
    }

    fn singular_points(&self) -> Vec<DVector<f64>> {
        if self.power < 2.0 {
            vec![self.center.clone()]
        } else {
            Vec::new()
        }
    }
}

/// `scale · ‖s - center‖²`, the strongly convex reference cost.
pub struct Quadratic {
    scale: f64,
    center: DVector<f64>,
}

impl Quadratic {
    pub fn new(scale: f64, center: DVector<f64>) -> Self {
        Self { scale, center }
    }
}

impl Cost for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        let u = s - &self.center;
        self.scale * u.norm_squared()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        (s - &self.center) * (2.0 * self.scale)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(2.0 * self.scale.abs())
    }
}

/// `‖s - center‖² / sqrt(‖s - center‖² + offset)`, smooth for `offset > 0`.
pub struct SqrtScaledSquare {
    center: DVector<f64>,
    offset: f64,
}

impl SqrtScaledSquare {
    pub fn new(center: DVector<f64>, offset: f64) -> Self {
        assert!(offset > 0.0);
        Self { center, offset }
    }
}

impl Cost for SqrtScaledSquare {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        let y = (s - &self.center).norm_squared();
        y / (y + self.offset).sqrt()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        // d/dy [ y (y+c)^{-1/2} ] = (y + 2c) / (2 (y+c)^{3/2}); chain rule with ∇y = 2u.
        let u = s - &self.center;
        let y = u.norm_squared();
        let c = self.offset;
        u * ((y + 2.0 * c) / (y + c).powf(1.5))
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // Radial and tangential Hessian eigenvalues are both maximized at the
        // center where they equal 2c/c^{3/2} = 2/√c.
        Some(2.0 / self.offset.sqrt())
    }
}

/// The five benchmark local costs over `R²`:
///
/// ```text
/// f₁ = 5 sin(‖s + [4, 5]ᵀ‖)            (nonconvex)
/// f₂ = 10 cos(ln ‖s + [8, 10]ᵀ‖)       (nonconvex)
/// f₃ = 4 ‖s + [2, 3]ᵀ‖^{4/3}
/// f₄ = 2 ‖s - [3, 5]ᵀ‖²
/// f₅ = ‖s + [1, 2]ᵀ‖² / sqrt(‖s + [1, 2]ᵀ‖² + 2)
/// ```
pub fn example1_costs() -> Vec<super::SharedCost> {
    vec![
        std::sync::Arc::new(SineNorm::new(5.0, dvector![-4.0, -5.0])),
        std::sync::Arc::new(CosLogNorm::new(10.0, dvector![-8.0, -10.0])),
        std::sync::Arc::new(NormPower::new(4.0, 4.0 / 3.0, dvector![-2.0, -3.0])),
        std::sync::Arc::new(Quadratic::new(2.0, dvector![3.0, 5.0])),
        std::sync::Arc::new(SqrtScaledSquare::new(dvector![-1.0, -2.0], 2.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quadratic_minimum() {
        let costs = example1_costs();
        let f4 = &costs[3];
        let s = dvector![3.0, 5.0];
        assert_eq!(f4.value(&s), 0.0);
        assert_eq!(f4.gradient(&s), dvector![0.0, 0.0]);
    }

    #[test]
    fn norm_power_gradient_vanishes_at_kink_center() {
        let costs = example1_costs();
        let f3 = &costs[2];
        let s = dvector![-2.0, -3.0];
        assert_eq!(f3.gradient(&s), dvector![0.0, 0.0]);
        assert_eq!(f3.value(&s), 0.0);
    }

    #[test]
    fn sine_norm_at_quarter_period() {
        let costs = example1_costs();
        let f1 = &costs[0];
        let s = dvector![-4.0 + FRAC_PI_2, -5.0];
        assert!((f1.value(&s) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sine_norm_gradient_regularized_at_center() {
        let f1 = SineNorm::new(5.0, dvector![0.0, 0.0]);
        assert_eq!(f1.gradient(&dvector![0.0, 0.0]), dvector![0.0, 0.0]);
    }

    #[test]
    fn cos_log_norm_finite_at_center() {
        let f2 = CosLogNorm::new(10.0, dvector![0.0, 0.0]);
        let v = f2.value(&dvector![0.0, 0.0]);
        assert!(v.is_finite());
        let g = f2.gradient(&dvector![0.0, 0.0]);
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn library_dimensions_and_hints() {
        let costs = example1_costs();
        assert_eq!(costs.len(), 5);
        for c in &costs {
            assert_eq!(c.dim(), 2);
            assert!(c.lipschitz_hint().unwrap() > 0.0);
        }
    }
}
