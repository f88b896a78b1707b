//! Seeded additive Gaussian noise.
//!
//! Samples come from xoshiro256++ seeded with `seed_from_u64`, turned into
//! normals by the Box-Muller transform (both outputs of each pair used), and
//! added in row-major order. The stream is bit-reproducible per seed.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Image2D;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

/// Standard normal samples.
pub struct GaussianStream {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream { rng: Xoshiro256PlusPlus::seed_from_u64(seed), spare: None }
    }

    /// Uniform on `(0, 1]`, 53 bits.
    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = std::f64::consts::TAU * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// `u + sqrt(variance) N(0, 1)` pixelwise.
pub fn add_gaussian_noise(u: &Image2D, spec: NoiseSpec) -> Result<Image2D> {
    if !(spec.variance.is_finite() && spec.variance >= 0.0) {
        return Err(invalid(format!("variance must be nonnegative, got {}", spec.variance)));
    }
    if spec.variance == 0.0 {
        return Ok(u.clone());
    }
    let sigma = spec.variance.sqrt();
    let mut stream = GaussianStream::new(spec.seed);
    let mut out = u.clone();
    // ndarray iterates standard-layout arrays in row-major order.
    for v in out.values.iter_mut() {
        *v += sigma * stream.next_normal();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros() -> Image2D {
        Image2D::constant(200, 200, 1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_variance_is_identity() {
        let u = Image2D::from_fn(5, 7, 1.0, |i, j| (i * j) as f64).unwrap();
        assert_eq!(add_gaussian_noise(&u, NoiseSpec { variance: 0.0, seed: 1 }).unwrap(), u);
        assert!(add_gaussian_noise(&u, NoiseSpec { variance: -1.0, seed: 1 }).is_err());
    }

    #[test]
    fn sample_moments() {
        let noisy = add_gaussian_noise(&zeros(), NoiseSpec { variance: 0.01, seed: 42 }).unwrap();
        let n = 40_000.0;
        let mean = noisy.values().sum() / n;
        let var = noisy.values().mapv(|v| (v - mean) * (v - mean)).sum() / (n - 1.0);
        assert!(mean.abs() <= 3.0 * 0.1 / n.sqrt(), "{mean}");
        assert!((var - 0.01).abs() <= 0.05 * 0.01, "{var}");
    }

    #[test]
    fn reproducible_per_seed() {
        let spec = NoiseSpec { variance: 0.01, seed: 7 };
        let a = add_gaussian_noise(&zeros(), spec).unwrap();
        assert_eq!(a, add_gaussian_noise(&zeros(), spec).unwrap());
        assert_ne!(a, add_gaussian_noise(&zeros(), NoiseSpec { seed: 8, ..spec }).unwrap());
    }
}
