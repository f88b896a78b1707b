//! Synthetic test data: 1D step-type signals on `(-L, L)` and 2D images in
//! `[0, 1]` with unit pixel spacing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Grid1D, Image2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PhantomSpec {
    /// `0` on `(-L, 0]`, `h` on `(0, L)`.
    Step1D { h: f64, l: f64, n: usize },
    /// `slope x` on `(-L, 0]`, `slope x + h` on `(0, L)`.
    AffineStep1D { h: f64, l: f64, n: usize, slope: f64 },
    /// Constant, affine and quadratic pieces with two jumps, scaled by
    /// `h / 100`; see [`piecewise_mix`].
    PiecewiseMix1D { h: f64, l: f64, n: usize },
    /// Square with a vertical ramp on a horizontally ramped background,
    /// plus a small constant inset; values in `[0, 1]`.
    RampSquare2D { size: usize },
    /// Radially symmetric: a raised disc with a sharp rim, a smooth dome on
    /// it and a conical spike in the centre; values in `[0, 1]`.
    RadialSpike2D { size: usize },
}

impl PhantomSpec {
    pub fn step(h: f64, l: f64, n: usize) -> Self {
        PhantomSpec::Step1D { h, l, n }
    }

    pub fn is_1d(&self) -> bool {
        matches!(self, PhantomSpec::Step1D { .. } | PhantomSpec::AffineStep1D { .. } | PhantomSpec::PiecewiseMix1D { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhantomSpec::Step1D { h, l, n }
            | PhantomSpec::AffineStep1D { h, l, n, .. }
            | PhantomSpec::PiecewiseMix1D { h, l, n } => {
                if !(h.is_finite() && l.is_finite() && l > 0.0) {
                    return Err(invalid(format!("need finite h and L > 0, got h={h}, L={l}")));
                }
                if n < 2 {
                    return Err(invalid(format!("need at least 2 samples, got {n}")));
                }
                if let PhantomSpec::AffineStep1D { slope, .. } = self {
                    if !slope.is_finite() {
                        return Err(invalid("slope must be finite"));
                    }
                }
                Ok(())
            }
            PhantomSpec::RampSquare2D { size } | PhantomSpec::RadialSpike2D { size } => {
                if size < 8 {
                    return Err(invalid(format!("2D phantoms need size >= 8, got {size}")));
                }
                Ok(())
            }
        }
    }

    /// The continuous 1D profile at `x`; `None` for 2D kinds.
    pub fn profile(&self, x: f64) -> Option<f64> {
        match *self {
            PhantomSpec::Step1D { h, .. } => Some(if x <= 0.0 { 0.0 } else { h }),
            PhantomSpec::AffineStep1D { h, slope, .. } => Some(if x <= 0.0 { slope * x } else { slope * x + h }),
            PhantomSpec::PiecewiseMix1D { h, l, .. } => Some(h / 100.0 * piecewise_mix(x / l)),
            _ => None,
        }
    }

    /// Samples a 1D kind at the cell centres of `n` cells on `(-L, L)`.
    pub fn generate_1d(&self) -> Result<Grid1D> {
        self.validate()?;
        match *self {
            PhantomSpec::Step1D { l, n, .. } | PhantomSpec::AffineStep1D { l, n, .. } | PhantomSpec::PiecewiseMix1D { l, n, .. } => {
                Grid1D::sample(-l, l, n, |x| self.profile(x).expect("1D kind"))
            }
            _ => Err(invalid("not a 1D phantom")),
        }
    }
}

/// Reference profile on `(-1, 1)` with range `[10, 70]`:
/// `10` on `(-1, -0.4]`, `40 + 50 (x + 0.4)` on `(-0.4, 0.2]`,
/// `20 + 100 (x - 0.6)^2` on `(0.2, 1)`.
pub fn piecewise_mix(x: f64) -> f64 {
    if x <= -0.4 {
        10.0
    } else if x <= 0.2 {
        40.0 + 50.0 * (x + 0.4)
    } else {
        20.0 + 100.0 * (x - 0.6) * (x - 0.6)
    }
}

fn ramp_square(size: usize) -> impl Fn(usize, usize) -> f64 {
    let s = size as f64;
    move |i, j| {
        // Pixel centres in (0, 1).
        let y = (i as f64 + 0.5) / s;
        let x = (j as f64 + 0.5) / s;
        let inside = |lo: f64, hi: f64| (lo..hi).contains(&x) && (lo..hi).contains(&y);
        if inside(0.42, 0.58) {
            0.3
        } else if inside(0.2, 0.8) {
            0.95 - 0.5 * (y - 0.2) / 0.6
        } else {
            0.05 + 0.25 * x
        }
    }
}

fn radial_spike(size: usize) -> impl Fn(usize, usize) -> f64 {
    let s = size as f64;
    move |i, j| {
        let y = (i as f64 + 0.5) / s - 0.5;
        let x = (j as f64 + 0.5) / s - 0.5;
        let r = (x * x + y * y).sqrt() / 0.5;
        let disc = if r < 0.85 { 0.2 } else { 0.0 };
        let dome = if r < 0.6 { 0.4 * (1.0 - (r / 0.6).powi(2)) } else { 0.0 };
        let spike = (0.25 * (1.0 - r / 0.12)).max(0.0);
        0.1 + disc + dome + spike
    }
}

/// Deterministic phantom; 1D kinds come back as `n x 1` images.
pub fn generate(spec: &PhantomSpec) -> Result<Image2D> {
    spec.validate()?;
    match *spec {
        PhantomSpec::RampSquare2D { size } => Image2D::from_fn(size, size, 1.0, ramp_square(size)),
        PhantomSpec::RadialSpike2D { size } => Image2D::from_fn(size, size, 1.0, radial_spike(size)),
        _ => Ok(spec.generate_1d()?.to_image()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Sampled;

    #[test]
    fn step_halves() {
        let g = PhantomSpec::step(100.0, 1.0, 2000).generate_1d().unwrap();
        assert_eq!(g.values().len(), 2000);
        assert!(g.values().iter().take(1000).all(|&v| v == 0.0));
        assert!(g.values().iter().skip(1000).all(|&v| v == 100.0));
        assert_eq!(g.spacing(), 1e-3);
    }

    #[test]
    fn affine_step_endpoints() {
        let spec = PhantomSpec::AffineStep1D { h: 100.0, l: 1.0, n: 2000, slope: 0.1 };
        assert!((spec.profile(-1.0).unwrap() + 0.1).abs() < 1e-15);
        assert!((spec.profile(1e-12).unwrap() - 100.0).abs() < 1e-12);
        assert!((spec.profile(0.0).unwrap()).abs() < 1e-15);
        let g = spec.generate_1d().unwrap();
        assert!((g.values()[0] - 0.1 * g.x(0)).abs() < 1e-15);
    }

    #[test]
    fn mix_pieces() {
        assert_eq!(piecewise_mix(-0.7), 10.0);
        assert!((piecewise_mix(0.0) - 60.0).abs() < 1e-12);
        assert!((piecewise_mix(0.6) - 20.0).abs() < 1e-12);
        let g = PhantomSpec::PiecewiseMix1D { h: 100.0, l: 1.0, n: 400 }.generate_1d().unwrap();
        assert!(g.values().iter().all(|&v| (10.0..=70.0).contains(&v)));
    }

    #[test]
    fn images_in_unit_range() {
        for spec in [PhantomSpec::RampSquare2D { size: 200 }, PhantomSpec::RadialSpike2D { size: 200 }] {
            let img = generate(&spec).unwrap();
            assert_eq!(img.shape(), (200, 200));
            assert!(img.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(img, generate(&spec).unwrap());
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(generate(&PhantomSpec::step(100.0, -1.0, 10)).is_err());
        assert!(generate(&PhantomSpec::step(100.0, 1.0, 1)).is_err());
        assert!(generate(&PhantomSpec::RampSquare2D { size: 3 }).is_err());
    }
}
