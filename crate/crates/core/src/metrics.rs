//! PSNR and SSIM.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Image2D;

/// Peak signal-to-noise ratio. Identical images have no finite value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    /// Decibels, with `+inf` for identical images.
    pub fn value(self) -> f64 {
        match self {
            Psnr::Db(v) => v,
            Psnr::Identical => f64::INFINITY,
        }
    }
}

/// `10 log10(peak^2 / MSE)`.
pub fn psnr(u: &Image2D, reference: &Image2D, peak: f64) -> Result<Psnr> {
    u.ensure_same_shape(reference)?;
    if !(peak.is_finite() && peak > 0.0) {
        return Err(invalid(format!("peak must be positive, got {peak}")));
    }
    let n = u.values.len() as f64;
    let mse = u.values.iter().zip(reference.values.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(Psnr::Identical);
    }
    Ok(Psnr::Db(10.0 * (peak * peak / mse).log10()))
}

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian filter, "valid" region only.
fn filter_valid(a: &Array2<f64>, k: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (n, m) = a.dim();
    let (vn, vm) = (n + 1 - SSIM_WINDOW, m + 1 - SSIM_WINDOW);
    let rows: Array2<f64> = Array2::from_shape_fn((vn, m), |(i, j)| (0..SSIM_WINDOW).map(|r| k[r] * a[[i + r, j]]).sum::<f64>());
    Array2::from_shape_fn((vn, vm), |(i, j)| (0..SSIM_WINDOW).map(|c| k[c] * rows[[i, j + c]]).sum::<f64>())
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// `C1 = (0.01 R)^2`, `C2 = (0.03 R)^2`, over window positions fully inside
/// the image.
pub fn ssim(u: &Image2D, reference: &Image2D, dynamic_range: f64) -> Result<f64> {
    u.ensure_same_shape(reference)?;
    let (n, m) = u.shape();
    if n < SSIM_WINDOW || m < SSIM_WINDOW {
        return Err(invalid(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {n}x{m}")));
    }
    if !(dynamic_range.is_finite() && dynamic_range > 0.0) {
        return Err(invalid(format!("dynamic range must be positive, got {dynamic_range}")));
    }
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let k = gaussian_kernel();
    let (a, b) = (&u.values, &reference.values);
    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let saa = filter_valid(&(a * a), &k);
    let sbb = filter_valid(&(b * b), &k);
    let sab = filter_valid(&(a * b), &k);
    let mut total = 0.0;
    for ((((&ma, &mb), &xaa), &xbb), &xab) in mu_a.iter().zip(mu_b.iter()).zip(saa.iter()).zip(sbb.iter()).zip(sab.iter()) {
        let va = xaa - ma * ma;
        let vb = xbb - mb * mb;
        let cov = xab - ma * mb;
        total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pattern(n: usize, m: usize) -> Image2D {
        Image2D::from_fn(n, m, 1.0, |i, j| {
            let base = if (i / 4 + j / 5) % 2 == 0 { 0.2 } else { 0.8 };
            base + 0.05 * ((i * j) as f64 * 0.37).sin()
        })
        .unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = pattern(16, 16);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), Psnr::Identical);
        assert!(psnr(&a, &a, 1.0).unwrap().value().is_infinite());
        let b = a.map(|v| v + 0.1).unwrap();
        assert_relative_eq!(psnr(&b, &a, 1.0).unwrap().value(), 20.0, epsilon = 1e-9);
        assert!(psnr(&a, &pattern(16, 15), 1.0).is_err());
    }

    #[test]
    fn ssim_examples() {
        let a = pattern(24, 20);
        assert_relative_eq!(ssim(&a, &a, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let inv = a.map(|v| 1.0 - v).unwrap();
        assert!(ssim(&inv, &a, 1.0).unwrap() < 0.5);
        let b = a.map(|v| v * 0.9 + 0.03).unwrap();
        let (x, y) = (ssim(&a, &b, 1.0).unwrap(), ssim(&b, &a, 1.0).unwrap());
        assert!((x - y).abs() <= 1e-12);
        let small = pattern(10, 30);
        assert!(ssim(&small, &small, 1.0).is_err());
    }

    /// Direct evaluation: for each window position, weighted sums over the
    /// 11x11 patch with the outer-product Gaussian.
    fn brute_ssim(a: &Image2D, b: &Image2D, r: f64) -> f64 {
        let k = gaussian_kernel();
        let (n, m) = a.shape();
        let (c1, c2) = ((0.01 * r).powi(2), (0.03 * r).powi(2));
        let mut total = 0.0;
        let mut count = 0.0;
        for i in 0..=n - SSIM_WINDOW {
            for j in 0..=m - SSIM_WINDOW {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for r in 0..SSIM_WINDOW {
                    for c in 0..SSIM_WINDOW {
                        let wgt = k[r] * k[c];
                        let (x, y) = (a.values[[i + r, j + c]], b.values[[i + r, j + c]]);
                        ma += wgt * x;
                        mb += wgt * y;
                        saa += wgt * x * x;
                        sbb += wgt * y * y;
                        sab += wgt * x * y;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn ssim_matches_brute_force() {
        let a = pattern(13, 12);
        let b = Image2D::from_fn(13, 12, 1.0, |i, j| a.values[[i, j]] + 0.1 * ((i + 2 * j) % 3) as f64).unwrap();
        assert_relative_eq!(ssim(&a, &b, 1.0).unwrap(), brute_ssim(&a, &b, 1.0), epsilon = 1e-12);
        // A constant shift only touches the luminance term.
        let shifted = a.map(|v| v + 0.2).unwrap();
        let s = ssim(&a, &shifted, 1.0).unwrap();
        assert!(s < 1.0);
        assert_relative_eq!(s, brute_ssim(&a, &shifted, 1.0), epsilon = 1e-12);
    }
}
