//! Seeded synthetic measurement generation for the estimation benchmark.
//!
//! Normal variates come from the Marsaglia polar method over a ChaCha12
//! stream, so datasets are bit-reproducible across platforms: the generator
//! consumes `u64`s from the ChaCha stream, maps them to uniforms in [0, 1) by
//! the 53-bit shift, and applies the polar rejection loop. One stream is used
//! per dataset; sensors are drawn in order, samples within a sensor in order,
//! coordinates within a sample in order.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::costs::{CostError, HuberSpec};

/// Marsaglia polar sampler with the customary spare-value cache.
pub struct PolarGaussian {
    spare: Option<f64>,
}

impl PolarGaussian {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample(&mut self, rng: &mut impl Rng) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.gen::<f64>() - 1.0;
            let v = 2.0 * rng.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }
}

impl Default for PolarGaussian {
    fn default() -> Self {
        Self::new()
    }
}

/// Draws `count_per_sensor` measurements per sensor, sensor `i` (0-based)
/// from `N(mu, scales[i] · I)`, as Huber specs with tolerance `varsigma`.
pub fn generate_gaussian_data(
    seed: u64,
    mu: &DVector<f64>,
    scales: &[f64],
    count_per_sensor: usize,
    varsigma: f64,
) -> Result<Vec<HuberSpec>, CostError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut gauss = PolarGaussian::new();
    let dim = mu.len();
    scales
        .iter()
        .map(|&scale| {
            let sd = scale.sqrt();
            let data: Vec<DVector<f64>> = (0..count_per_sensor)
                .map(|_| DVector::from_fn(dim, |k, _| mu[k] + sd * gauss.sample(&mut rng)))
                .collect();
            HuberSpec::new(varsigma, data)
        })
        .collect()
}
