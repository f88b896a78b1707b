//! Sampled signals, images and vector fields, plus the parameter set shared
//! by the solvers.
//!
//! All containers are immutable once built. Norms come in two flavours,
//! selected by [`NormConvention`]: plain sums over samples, or sums weighted
//! by the cell volume `t^d` so that discrete norms approximate the continuum
//! integrals on a physical domain.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvlpError};

/// How sums over samples are turned into norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormConvention {
    /// Sums weighted by `t^d` (cell volume); approximates integrals.
    Quadrature,
    /// Unweighted sums; the pixel-level model.
    Discrete,
}

impl NormConvention {
    pub fn from_flag(quadrature: bool) -> Self {
        if quadrature {
            NormConvention::Quadrature
        } else {
            NormConvention::Discrete
        }
    }

    /// Cell volume used as the quadrature weight.
    pub fn weight(self, spacing: f64, dimension: i32) -> f64 {
        match self {
            NormConvention::Quadrature => spacing.powi(dimension),
            NormConvention::Discrete => 1.0,
        }
    }
}

/// Anything that exposes a flat list of samples on a uniform grid.
pub trait Sampled {
    fn samples(&self) -> impl Iterator<Item = f64> + '_;
    fn spacing(&self) -> f64;
    /// Geometric dimension of the grid (1 for signals and `n x 1` images).
    fn dimension(&self) -> i32;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    Ok(())
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &'static str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TvlpError::NonFinite { stage: what })
    }
}

/// A uniformly sampled 1D signal on `[origin, origin + n*spacing]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    values: Array1<f64>,
    spacing: f64,
    origin: f64,
}

impl Grid1D {
    pub fn new(values: impl Into<Array1<f64>>, spacing: f64, origin: f64) -> Result<Self> {
        let values = values.into();
        if values.len() < 2 {
            return Err(invalid(format!("a 1D grid needs at least 2 samples, got {}", values.len())));
        }
        check_spacing(spacing)?;
        if !origin.is_finite() {
            return Err(invalid("grid origin must be finite"));
        }
        check_finite(values.iter(), "grid construction")?;
        Ok(Grid1D { values, spacing, origin })
    }

    /// Samples `f` at the cell centres of `n` equal cells covering `(a, b)`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
            return Err(invalid(format!("empty interval ({a}, {b})")));
        }
        let t = (b - a) / n as f64;
        let values: Array1<f64> = (0..n).map(|i| f(a + (i as f64 + 0.5) * t)).collect();
        Grid1D::new(values, t, a)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Cell-centre coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.spacing
    }

    pub fn coordinates(&self) -> Array1<f64> {
        (0..self.values.len()).map(|i| self.x(i)).collect()
    }

    /// Length of the covered interval.
    pub fn measure(&self) -> f64 {
        self.spacing * self.values.len() as f64
    }

    /// The same samples viewed as an `n x 1` image.
    pub fn to_image(&self) -> Image2D {
        let n = self.values.len();
        let values = self.values.clone().into_shape_with_order((n, 1)).expect("n x 1 reshape");
        Image2D { values, spacing: self.spacing }
    }

    /// Inverse of [`Grid1D::to_image`]; the image must have a single column.
    pub fn from_image(image: &Image2D, origin: f64) -> Result<Self> {
        let (n, m) = image.shape();
        if m != 1 {
            return Err(TvlpError::ShapeMismatch { expected: (n, 1), found: (n, m) });
        }
        Grid1D::new(image.values.column(0).to_owned(), image.spacing, origin)
    }

    pub fn with_values(&self, values: Array1<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(TvlpError::ShapeMismatch {
                expected: (self.values.len(), 1),
                found: (values.len(), 1),
            });
        }
        Grid1D::new(values, self.spacing, self.origin)
    }
}

impl Sampled for Grid1D {
    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
    fn spacing(&self) -> f64 {
        self.spacing
    }
    fn dimension(&self) -> i32 {
        1
    }
    fn len(&self) -> usize {
        self.values.len()
    }
}

/// A real `n x m` image on a square grid of spacing `t`. An `n x 1` image
/// behaves as a 1D signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    pub(crate) values: Array2<f64>,
    pub(crate) spacing: f64,
}

impl Image2D {
    pub fn new(values: Array2<f64>, spacing: f64) -> Result<Self> {
        let (n, m) = values.dim();
        if n < 2 || m < 1 {
            return Err(invalid(format!("image must be at least 2 x 1, got {n} x {m}")));
        }
        check_spacing(spacing)?;
        check_finite(values.iter(), "image construction")?;
        Ok(Image2D { values, spacing })
    }

    pub fn from_fn(n: usize, m: usize, spacing: f64, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Image2D::new(Array2::from_shape_fn((n, m), |(i, j)| f(i, j)), spacing)
    }

    pub fn constant(n: usize, m: usize, spacing: f64, c: f64) -> Result<Self> {
        Image2D::new(Array2::from_elem((n, m), c), spacing)
    }

    /// Unchecked constructor for values produced by the library itself.
    pub(crate) fn from_parts(values: Array2<f64>, spacing: f64) -> Self {
        Image2D { values, spacing }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Same spacing, new samples.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.shape() {
            return Err(TvlpError::ShapeMismatch { expected: self.shape(), found: values.dim() });
        }
        Image2D::new(values, self.spacing)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.mapv(f))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `max - min` of the samples.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Largest absolute pointwise difference.
    pub fn max_abs_diff(&self, other: &Image2D) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub(crate) fn ensure_same_shape(&self, other: &Image2D) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(TvlpError::ShapeMismatch { expected: self.shape(), found: other.shape() });
        }
        Ok(())
    }
}

impl Sampled for Image2D {
    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
    fn spacing(&self) -> f64 {
        self.spacing
    }
    fn dimension(&self) -> i32 {
        if self.values.ncols() == 1 {
            1
        } else {
            2
        }
    }
    fn len(&self) -> usize {
        self.values.len()
    }
}

/// Two-component field attached to an image grid (gradients, auxiliary `w`,
/// split variables).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2D {
    pub(crate) comp1: Array2<f64>,
    pub(crate) comp2: Array2<f64>,
    pub(crate) spacing: f64,
}

impl VectorField2D {
    pub fn new(comp1: Array2<f64>, comp2: Array2<f64>, spacing: f64) -> Result<Self> {
        if comp1.dim() != comp2.dim() {
            return Err(TvlpError::ShapeMismatch { expected: comp1.dim(), found: comp2.dim() });
        }
        if comp1.is_empty() {
            return Err(invalid("vector field must be non-empty"));
        }
        check_spacing(spacing)?;
        check_finite(comp1.iter().chain(comp2.iter()), "vector field construction")?;
        Ok(VectorField2D { comp1, comp2, spacing })
    }

    pub fn zeros(shape: (usize, usize), spacing: f64) -> Self {
        VectorField2D {
            comp1: Array2::zeros(shape),
            comp2: Array2::zeros(shape),
            spacing,
        }
    }

    pub(crate) fn from_parts(comp1: Array2<f64>, comp2: Array2<f64>, spacing: f64) -> Self {
        VectorField2D { comp1, comp2, spacing }
    }

    pub fn comp1(&self) -> &Array2<f64> {
        &self.comp1
    }

    pub fn comp2(&self) -> &Array2<f64> {
        &self.comp2
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> (usize, usize) {
        self.comp1.dim()
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Array2<f64> {
        let mut out = self.comp1.clone();
        out.zip_mut_with(&self.comp2, |a, b| *a = a.hypot(*b));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.comp1.iter().chain(self.comp2.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        VectorField2D::from_parts(&self.comp1 * c, &self.comp2 * c, self.spacing)
    }

    /// Euclidean inner product of all components (no quadrature weight).
    pub fn dot(&self, other: &VectorField2D) -> f64 {
        (&self.comp1 * &other.comp1).sum() + (&self.comp2 * &other.comp2).sum()
    }
}

impl std::ops::Sub for &VectorField2D {
    type Output = VectorField2D;
    fn sub(self, rhs: &VectorField2D) -> VectorField2D {
        VectorField2D::from_parts(&self.comp1 - &rhs.comp1, &self.comp2 - &rhs.comp2, self.spacing)
    }
}

impl std::ops::Add for &VectorField2D {
    type Output = VectorField2D;
    fn add(self, rhs: &VectorField2D) -> VectorField2D {
        VectorField2D::from_parts(&self.comp1 + &rhs.comp1, &self.comp2 + &rhs.comp2, self.spacing)
    }
}

/// Which power of the `L^p` norm penalises the auxiliary field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Homogeneity {
    /// `beta * ||w||_p`
    OneHomogeneous,
    /// `(beta / p) * ||w||_p^p`
    PHomogeneous,
}

/// Parameters of a TVL^p solve.
///
/// `alpha` and `beta` are always the continuum values; under the
/// quadrature convention the solver rescales them internally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub mode: Homogeneity,
    /// Split Bregman penalty; `None` selects [`SolveParams::default_lambda`].
    pub lambda: Option<f64>,
    /// `None` selects quadrature for 1D data and discrete sums for 2D.
    pub convention: Option<NormConvention>,
    pub tol: f64,
    pub max_outer: usize,
    pub inner_fp_iters: usize,
}

impl SolveParams {
    pub fn new(alpha: f64, beta: f64, p: f64) -> Result<Self> {
        let params = SolveParams {
            alpha,
            beta,
            p,
            mode: Homogeneity::OneHomogeneous,
            lambda: None,
            convention: None,
            tol: 1e-6,
            max_outer: 5000,
            inner_fp_iters: 5,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mode(mut self, mode: Homogeneity) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_convention(mut self, convention: NormConvention) -> Self {
        self.convention = Some(convention);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn with_inner_fp_iters(mut self, iters: usize) -> Self {
        self.inner_fp_iters = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(invalid(format!("p must lie in (1, inf), got {}", self.p)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(lambda) = self.lambda {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(invalid(format!("lambda must be positive, got {lambda}")));
            }
        }
        if self.max_outer == 0 || self.inner_fp_iters == 0 {
            return Err(invalid("iteration caps must be positive"));
        }
        Ok(())
    }

    /// Hölder conjugate of `p`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Empirical penalty rule: `10 alpha` for `p < 4`, `1000 alpha` otherwise.
    pub fn default_lambda(&self) -> f64 {
        if self.p < 4.0 {
            10.0 * self.alpha
        } else {
            1000.0 * self.alpha
        }
    }

    pub fn resolve_convention(&self, image: &Image2D) -> NormConvention {
        self.convention.unwrap_or(if image.dimension() == 1 {
            NormConvention::Quadrature
        } else {
            NormConvention::Discrete
        })
    }
}

/// Hölder conjugate exponent `q` with `1/p + 1/q = 1`; `p = inf` maps to 1.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(invalid(format!("conjugate exponent needs p > 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(1.0);
    }
    Ok(p / (p - 1.0))
}

/// `(sum |g_i|^p * weight)^(1/p)`, with the weight set by the convention.
pub fn weighted_lp_norm(g: &impl Sampled, p: f64, convention: NormConvention) -> f64 {
    debug_assert!(p >= 1.0 && p.is_finite());
    let weight = convention.weight(g.spacing(), g.dimension());
    let scale = g.samples().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    // Normalise by the largest sample so large p does not overflow.
    let sum: f64 = g.samples().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * (sum * weight).powf(1.0 / p)
}

/// Arithmetic mean of the samples.
pub fn mean_value(f: &impl Sampled) -> f64 {
    f.samples().sum::<f64>() / f.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn conjugate_exponent_values() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert_eq!(conjugate_exponent(f64::INFINITY).unwrap(), 1.0);
        assert_relative_eq!(conjugate_exponent(4.0 / 3.0).unwrap(), 4.0, epsilon = 1e-12);
        assert!(conjugate_exponent(1.0).is_err());
        assert!(conjugate_exponent(0.5).is_err());
        assert!(conjugate_exponent(f64::NAN).is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let zeros = Grid1D::new(vec![0.0; 5], 1.0, 0.0).unwrap();
        assert_eq!(weighted_lp_norm(&zeros, 2.0, NormConvention::Discrete), 0.0);

        let g = Grid1D::new(vec![3.0, 4.0], 1.0, 0.0).unwrap();
        assert_relative_eq!(weighted_lp_norm(&g, 2.0, NormConvention::Discrete), 5.0, epsilon = 1e-14);

        let ones = Grid1D::sample(-1.0, 1.0, 2000, |_| 1.0).unwrap();
        assert_relative_eq!(ones.spacing(), 0.001, epsilon = 1e-15);
        assert_relative_eq!(
            weighted_lp_norm(&ones, 2.0, NormConvention::Quadrature),
            2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mean_examples() {
        let c = Grid1D::new(vec![7.5; 4], 1.0, 0.0).unwrap();
        assert_eq!(mean_value(&c), 7.5);
        let step = Grid1D::sample(-1.0, 1.0, 2000, |x| if x <= 0.0 { 0.0 } else { 100.0 }).unwrap();
        assert_relative_eq!(mean_value(&step), 50.0, epsilon = 1e-12);
        let g = Grid1D::new(vec![1.0, 2.0, 3.0], 1.0, 0.0).unwrap();
        assert_eq!(mean_value(&g), 2.0);
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Grid1D::new(vec![1.0], 1.0, 0.0).is_err());
        assert!(Grid1D::new(vec![1.0, 2.0], 0.0, 0.0).is_err());
        assert!(Grid1D::new(vec![1.0, f64::NAN], 1.0, 0.0).is_err());
        assert!(Image2D::constant(1, 3, 1.0, 0.0).is_err());
        assert!(Image2D::constant(2, 1, -1.0, 0.0).is_err());
        assert!(VectorField2D::new(Array2::zeros((2, 2)), Array2::zeros((2, 3)), 1.0).is_err());
        assert!(SolveParams::new(1.0, 1.0, 1.0).is_err());
        assert!(SolveParams::new(0.0, 1.0, 2.0).is_err());
        assert!(SolveParams::new(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn grid_image_round_trip() {
        let g = Grid1D::sample(-1.0, 1.0, 10, |x| x * x).unwrap();
        let img = g.to_image();
        assert_eq!(img.shape(), (10, 1));
        assert_eq!(img.dimension(), 1);
        let back = Grid1D::from_image(&img, g.origin()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn lambda_heuristic() {
        let p = SolveParams::new(0.1, 1.0, 2.0).unwrap();
        assert_relative_eq!(p.default_lambda(), 1.0, epsilon = 1e-15);
        let p = SolveParams::new(0.1, 1.0, 4.0).unwrap();
        assert_relative_eq!(p.default_lambda(), 100.0, epsilon = 1e-12);
    }
}
