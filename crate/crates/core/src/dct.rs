//! Orthonormal type-II DCT and the spectral solver for `(I - lambda*Lap) u = c`
//! under zero Neumann boundary conditions.
//!
//! The Neumann Laplacian `Lap = div grad` built from [`crate::ops`] is
//! diagonalised by the 2D DCT-II, so the linear system is solved exactly by
//! `u = W^T D^{-1} W c`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{invalid, Result};
use crate::grid::Image2D;
use crate::ops::{divergence_raw, gradient_raw};

/// Cached 1D transforms for both axes of an `n x m` grid.
#[derive(Clone)]
pub struct DctPlan {
    rows: Option<Arc<dyn TransformType2And3<f64>>>,
    cols: Option<Arc<dyn TransformType2And3<f64>>>,
    shape: (usize, usize),
}

impl std::fmt::Debug for DctPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DctPlan").field("shape", &self.shape).finish()
    }
}

impl DctPlan {
    pub fn new(n: usize, m: usize) -> Self {
        let mut planner = DctPlanner::new();
        let rows = (n > 1).then(|| planner.plan_dct2(n));
        let cols = (m > 1).then(|| planner.plan_dct2(m));
        DctPlan { rows, cols, shape: (n, m) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// Orthonormal 2D DCT-II in place.
    pub fn forward(&self, data: &mut Array2<f64>) {
        assert_eq!(data.dim(), self.shape, "DCT plan shape mismatch");
        if let Some(plan) = &self.rows {
            transform_lanes(data, Axis(0), |buf, scratch| {
                plan.process_dct2_with_scratch(buf, scratch);
                normalise_forward(buf);
            }, plan.get_scratch_len());
        }
        if let Some(plan) = &self.cols {
            transform_lanes(data, Axis(1), |buf, scratch| {
                plan.process_dct2_with_scratch(buf, scratch);
                normalise_forward(buf);
            }, plan.get_scratch_len());
        }
    }

    /// Inverse of [`DctPlan::forward`] (orthonormal DCT-III) in place.
    pub fn inverse(&self, data: &mut Array2<f64>) {
        assert_eq!(data.dim(), self.shape, "DCT plan shape mismatch");
        if let Some(plan) = &self.cols {
            transform_lanes(data, Axis(1), |buf, scratch| {
                prescale_inverse(buf);
                plan.process_dct3_with_scratch(buf, scratch);
            }, plan.get_scratch_len());
        }
        if let Some(plan) = &self.rows {
            transform_lanes(data, Axis(0), |buf, scratch| {
                prescale_inverse(buf);
                plan.process_dct3_with_scratch(buf, scratch);
            }, plan.get_scratch_len());
        }
    }
}

fn transform_lanes(
    data: &mut Array2<f64>,
    axis: Axis,
    f: impl Fn(&mut [f64], &mut [f64]),
    scratch_len: usize,
) {
    let len = data.len_of(axis);
    let mut buf = vec![0.0; len];
    let mut scratch = vec![0.0; scratch_len];
    for mut lane in data.lanes_mut(axis) {
        match lane.as_slice_mut() {
            Some(slice) => f(slice, &mut scratch),
            None => {
                for (b, v) in buf.iter_mut().zip(lane.iter()) {
                    *b = *v;
                }
                f(&mut buf, &mut scratch);
                for (v, b) in lane.iter_mut().zip(buf.iter()) {
                    *v = *b;
                }
            }
        }
    }
}

fn normalise_forward(buf: &mut [f64]) {
    let n = buf.len() as f64;
    let s0 = (1.0 / n).sqrt();
    let s = (2.0 / n).sqrt();
    buf[0] *= s0;
    for v in &mut buf[1..] {
        *v *= s;
    }
}

fn prescale_inverse(buf: &mut [f64]) {
    let n = buf.len() as f64;
    buf[0] *= 2.0 / n.sqrt();
    let s = (2.0 / n).sqrt();
    for v in &mut buf[1..] {
        *v *= s;
    }
}

/// Orthonormal 2D type-II DCT.
pub fn dct2(u: &Image2D) -> Image2D {
    let (n, m) = u.shape();
    let mut data = u.values.clone();
    DctPlan::new(n, m).forward(&mut data);
    Image2D::from_parts(data, u.spacing)
}

/// Inverse of [`dct2`].
pub fn idct2(coeffs: &Image2D) -> Image2D {
    let (n, m) = coeffs.shape();
    let mut data = coeffs.values.clone();
    DctPlan::new(n, m).inverse(&mut data);
    Image2D::from_parts(data, coeffs.spacing)
}

/// How the diagonal of `W (I - lambda*Lap) W^T` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMethod {
    /// `1 + lambda/t^2 * (2 - 2cos(pi i/n) + 2 - 2cos(pi j/m))`.
    Analytic,
    /// `[W A e1]_i / [W e1]_i`, probing the operator with the first unit vector.
    ImpulseProbe,
}

/// Eigenvalues of `I - lambda*Lap` in the DCT basis.
#[derive(Clone, Debug)]
pub struct NeumannSpectrum {
    eigenvalues: Array2<f64>,
    lambda: f64,
    spacing: f64,
}

impl NeumannSpectrum {
    pub fn eigenvalues(&self) -> &Array2<f64> {
        &self.eigenvalues
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Eigenvalues of the Neumann Laplacian `-Lap` (zero at the zero frequency).
pub(crate) fn laplacian_symbol(n: usize, m: usize, t: f64) -> Array2<f64> {
    let inv_t2 = 1.0 / (t * t);
    let row: Vec<f64> = (0..n).map(|i| 2.0 - 2.0 * (PI * i as f64 / n as f64).cos()).collect();
    let col: Vec<f64> = (0..m).map(|j| 2.0 - 2.0 * (PI * j as f64 / m as f64).cos()).collect();
    Array2::from_shape_fn((n, m), |(i, j)| (row[i] + col[j]) * inv_t2)
}

pub fn neumann_eigenvalues(
    n: usize,
    m: usize,
    lambda: f64,
    t: f64,
    method: SpectrumMethod,
) -> Result<NeumannSpectrum> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("spacing must be positive, got {t}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    if n == 0 || m == 0 {
        return Err(invalid("spectrum needs a non-empty grid"));
    }
    let eigenvalues = match method {
        SpectrumMethod::Analytic => laplacian_symbol(n, m, t).mapv(|s| 1.0 + lambda * s),
        SpectrumMethod::ImpulseProbe => {
            let plan = DctPlan::new(n, m);
            let mut e1 = Array2::zeros((n, m));
            e1[[0, 0]] = 1.0;
            let mut a_e1 = apply_screened_raw(&e1, lambda, t);
            plan.forward(&mut a_e1);
            plan.forward(&mut e1);
            a_e1 / e1
        }
    };
    Ok(NeumannSpectrum { eigenvalues, lambda, spacing: t })
}

pub(crate) fn apply_screened_raw(u: &Array2<f64>, lambda: f64, t: f64) -> Array2<f64> {
    let (g1, g2) = gradient_raw(u, t);
    let lap = divergence_raw(&g1, &g2, t);
    u - &(lap * lambda)
}

/// Applies `I - lambda*Lap` with the finite-difference operators.
pub fn apply_screened_laplacian(u: &Image2D, lambda: f64) -> Image2D {
    Image2D::from_parts(apply_screened_raw(&u.values, lambda, u.spacing), u.spacing)
}

/// Reusable spectral solver for a fixed shape, `lambda` and spacing.
#[derive(Clone, Debug)]
pub struct ScreenedPoisson {
    plan: DctPlan,
    spectrum: NeumannSpectrum,
}

impl ScreenedPoisson {
    pub fn new(n: usize, m: usize, lambda: f64, t: f64) -> Result<Self> {
        Ok(ScreenedPoisson {
            plan: DctPlan::new(n, m),
            spectrum: neumann_eigenvalues(n, m, lambda, t, SpectrumMethod::Analytic)?,
        })
    }

    pub fn spectrum(&self) -> &NeumannSpectrum {
        &self.spectrum
    }

    /// Overwrites `rhs` with the solution of `(I - lambda*Lap) u = rhs`.
    pub fn solve_in_place(&self, rhs: &mut Array2<f64>) {
        self.plan.forward(rhs);
        *rhs /= &self.spectrum.eigenvalues;
        self.plan.inverse(rhs);
    }
}

/// Solves `(I - lambda*Lap) u = rhs` with zero Neumann boundary conditions.
pub fn solve_screened_poisson(rhs: &Image2D, lambda: f64, t: f64) -> Result<Image2D> {
    let (n, m) = rhs.shape();
    let solver = ScreenedPoisson::new(n, m, lambda, t)?;
    let mut data = rhs.values.clone();
    solver.solve_in_place(&mut data);
    Ok(Image2D::from_parts(data, rhs.spacing))
}

/// Solver for the coupled system arising in the two-component decomposition:
///
/// ```text
/// (I - lambda*Lap) u + v = r1
/// u + (I - lambda*Lap) v = r2
/// ```
///
/// The zero frequency is singular (`u + v` is determined, the split is not);
/// it is resolved by giving `v` zero mean.
#[derive(Clone, Debug)]
pub(crate) struct CoupledPair {
    plan: DctPlan,
    symbol: Array2<f64>,
}

impl CoupledPair {
    pub(crate) fn new(n: usize, m: usize, lambda: f64, t: f64) -> Self {
        CoupledPair {
            plan: DctPlan::new(n, m),
            symbol: laplacian_symbol(n, m, t).mapv(|s| lambda * s),
        }
    }

    pub(crate) fn solve(&self, r1: &mut Array2<f64>, r2: &mut Array2<f64>) {
        self.plan.forward(r1);
        self.plan.forward(r2);
        ndarray::Zip::from(&mut *r1)
            .and(&mut *r2)
            .and(&self.symbol)
            .for_each(|a, b, &s| {
                if s == 0.0 {
                    // Constant mode: u + v = r1 (= r2 for consistent data).
                    *a = 0.5 * (*a + *b);
                    *b = 0.0;
                } else {
                    let d = 1.0 + s;
                    let det = s * (2.0 + s);
                    let (x, y) = (*a, *b);
                    *a = (d * x - y) / det;
                    *b = (d * y - x) / det;
                }
            });
        self.plan.inverse(r1);
        self.plan.inverse(r2);
    }
}
