//! Pointwise proximal maps used by the split Bregman solver: isotropic
//! shrinkage, the `L^p`-norm prox (fixed-point scheme), the p-homogeneous
//! prox, and the Huber closed forms.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvlpError};
use crate::grid::{Image2D, NormConvention, Sampled, VectorField2D};
use crate::ops::{gradient, raw_field_lp_norm};

/// Magnitudes below this are treated as exact zeros in `|w|^(p-2)`.
pub const ZERO_MAGNITUDE: f64 = 1e-14;

pub(crate) fn shrink_in_place(g1: &mut Array2<f64>, g2: &mut Array2<f64>, threshold: f64) {
    Zip::from(g1).and(g2).for_each(|a, b| {
        let mag = a.hypot(*b);
        if mag <= threshold {
            *a = 0.0;
            *b = 0.0;
        } else {
            let scale = (mag - threshold) / mag;
            *a *= scale;
            *b *= scale;
        }
    });
}

/// Isotropic soft thresholding: each pixel vector is pulled towards zero by
/// `threshold` in Euclidean length, and zeroed if shorter.
pub fn shrink(g: &VectorField2D, threshold: f64) -> VectorField2D {
    debug_assert!(threshold >= 0.0);
    let mut out = g.clone();
    shrink_in_place(&mut out.comp1, &mut out.comp2, threshold);
    out
}

/// Result of the fixed-point `L^p` prox.
#[derive(Clone, Debug)]
pub struct LpProx {
    pub w: VectorField2D,
    /// Relative residual of the first-order condition at `w`.
    pub residual: f64,
    pub sweeps: usize,
}

/// One sweep of `w_i <- eta_i ||w||^(p-1) / (kappa |w_i|^(p-2) + ||w||^(p-1))`.
///
/// The exact answer is zero iff `||eta||_q <= kappa`, which is returned
/// directly. Otherwise zero is not a solution, so a zero `w` restarts from
/// `eta` and zero pixels use `|eta_i|` in place of `|w_i|` (for `p < 2` the
/// raw map would keep them at zero forever).
///
/// For `p > 2` the per-pixel map has derivative `-(p-2) c/(1+c)` at its fixed
/// point, `c = kappa |w_i|^(p-2) / ||w||^(p-1)`, and oscillates once that
/// exceeds one in magnitude. Each pixel is therefore averaged with its
/// previous value using `theta = 2 / (2 + (p-2) c/(1+c))`; `theta = 1` for
/// `p <= 2`. The result is then rescaled by [`radial_step`], and for `p > 2`
/// the step is halved until the prox objective does not increase.
pub(crate) fn lp_fixed_point_sweep(
    w1: &mut Array2<f64>,
    w2: &mut Array2<f64>,
    eta1: &Array2<f64>,
    eta2: &Array2<f64>,
    kappa: f64,
    p: f64,
) {
    let q = p / (p - 1.0);
    if raw_field_lp_norm(eta1, eta2, q, 1.0) <= kappa {
        w1.fill(0.0);
        w2.fill(0.0);
        return;
    }
    let mut norm = raw_field_lp_norm(w1, w2, p, 1.0);
    if norm == 0.0 {
        w1.assign(eta1);
        w2.assign(eta2);
        norm = raw_field_lp_norm(w1, w2, p, 1.0);
    }
    let norm_pow = norm.powf(p - 1.0);
    let mut n1 = w1.clone();
    let mut n2 = w2.clone();
    Zip::from(&mut n1).and(&mut n2).and(eta1).and(eta2).for_each(|a, b, &e1, &e2| {
        let mut mag = a.hypot(*b);
        let mut theta_allowed = true;
        if mag < ZERO_MAGNITUDE {
            mag = e1.hypot(e2);
            theta_allowed = false;
            if mag < ZERO_MAGNITUDE {
                *a = 0.0;
                *b = 0.0;
                return;
            }
        }
        let c = kappa * mag.powf(p - 2.0) / norm_pow;
        let theta = if p > 2.0 && theta_allowed {
            2.0 / (2.0 + (p - 2.0) * c / (1.0 + c))
        } else {
            1.0
        };
        let factor = 1.0 / (1.0 + c);
        *a = (1.0 - theta) * *a + theta * e1 * factor;
        *b = (1.0 - theta) * *b + theta * e2 * factor;
    });
    if p <= 2.0 {
        radial_step(&mut n1, &mut n2, eta1, eta2, kappa, p);
        *w1 = n1;
        *w2 = n2;
        return;
    }
    let before = prox_objective(w1, w2, eta1, eta2, kappa, p);
    let mut step = 1.0;
    for _ in 0..30 {
        let mut c1 = &*w1 + &((&n1 - &*w1) * step);
        let mut c2 = &*w2 + &((&n2 - &*w2) * step);
        radial_step(&mut c1, &mut c2, eta1, eta2, kappa, p);
        if prox_objective(&c1, &c2, eta1, eta2, kappa, p) <= before {
            *w1 = c1;
            *w2 = c2;
            return;
        }
        step *= 0.5;
    }
    radial_step(w1, w2, eta1, eta2, kappa, p);
}

/// `kappa ||w||_p + 1/2 ||w - eta||^2`.
fn prox_objective(
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    eta1: &Array2<f64>,
    eta2: &Array2<f64>,
    kappa: f64,
    p: f64,
) -> f64 {
    let mut sq = 0.0;
    Zip::from(w1).and(w2).and(eta1).and(eta2).for_each(|&a, &b, &e1, &e2| {
        sq += (a - e1).powi(2) + (b - e2).powi(2);
    });
    kappa * raw_field_lp_norm(w1, w2, p, 1.0) + 0.5 * sq
}

/// Rescales `w` by the exact minimiser over `s > 0` of
/// `kappa ||s w||_p + 1/2 ||s w - eta||^2`. The sweep alone contracts slowly
/// along this direction when `kappa` is close to `||eta||_q`.
fn radial_step(
    w1: &mut Array2<f64>,
    w2: &mut Array2<f64>,
    eta1: &Array2<f64>,
    eta2: &Array2<f64>,
    kappa: f64,
    p: f64,
) {
    let sq: f64 = w1.iter().chain(w2.iter()).map(|v| v * v).sum();
    if sq == 0.0 {
        return;
    }
    let inner = (&*w1 * eta1).sum() + (&*w2 * eta2).sum();
    let s = (inner - kappa * raw_field_lp_norm(w1, w2, p, 1.0)) / sq;
    if s > 0.0 && s.is_finite() {
        w1.mapv_inplace(|v| v * s);
        w2.mapv_inplace(|v| v * s);
    }
}

pub(crate) fn lp_residual_raw(
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    eta1: &Array2<f64>,
    eta2: &Array2<f64>,
    kappa: f64,
    p: f64,
) -> f64 {
    let eta_norm = raw_field_lp_norm(eta1, eta2, 2.0, 1.0);
    let norm = raw_field_lp_norm(w1, w2, p, 1.0);
    if norm == 0.0 {
        // Subdifferential at zero: the condition is ||eta||_q <= kappa.
        let excess = (raw_field_lp_norm(eta1, eta2, p / (p - 1.0), 1.0) - kappa).max(0.0);
        return if eta_norm == 0.0 { 0.0 } else { excess / eta_norm };
    }
    let norm_pow = norm.powf(p - 1.0);
    let mut sum = 0.0;
    Zip::from(w1).and(w2).and(eta1).and(eta2).for_each(|&a, &b, &e1, &e2| {
        let mag = a.hypot(b);
        let coef = if norm == 0.0 || mag < ZERO_MAGNITUDE {
            0.0
        } else {
            kappa * mag.powf(p - 2.0) / norm_pow
        };
        let r1 = coef * a + a - e1;
        let r2 = coef * b + b - e2;
        sum += r1 * r1 + r2 * r2;
    });
    if eta_norm == 0.0 {
        sum.sqrt()
    } else {
        sum.sqrt() / eta_norm
    }
}

fn check_prox_args(kappa: f64, p: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(invalid(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

/// Relative residual of `kappa |w|^(p-2) w / ||w||_p^(p-1) + w - eta = 0`.
pub fn lp_prox_residual(w: &VectorField2D, eta: &VectorField2D, kappa: f64, p: f64) -> f64 {
    lp_residual_raw(&w.comp1, &w.comp2, &eta.comp1, &eta.comp2, kappa, p)
}

/// Approximates `argmin_w kappa ||w||_p + 1/2 ||w - eta||^2` by `iters`
/// fixed-point sweeps started from `w0` (or `eta`).
pub fn lp_prox_fixed_point(
    eta: &VectorField2D,
    kappa: f64,
    p: f64,
    w0: Option<&VectorField2D>,
    iters: usize,
) -> Result<LpProx> {
    check_prox_args(kappa, p)?;
    let start = w0.unwrap_or(eta);
    if start.shape() != eta.shape() {
        return Err(TvlpError::ShapeMismatch { expected: eta.shape(), found: start.shape() });
    }
    let mut w = start.clone();
    for _ in 0..iters {
        lp_fixed_point_sweep(&mut w.comp1, &mut w.comp2, &eta.comp1, &eta.comp2, kappa, p);
    }
    if !w.is_finite() {
        return Err(TvlpError::NonFinite { stage: "L^p fixed-point prox" });
    }
    let residual = lp_prox_residual(&w, eta, kappa, p);
    Ok(LpProx { w, residual, sweeps: iters })
}

/// Convergence mode: sweeps until the relative residual is at most `tol` or
/// `cap` sweeps have run.
pub fn lp_prox_converge(
    eta: &VectorField2D,
    kappa: f64,
    p: f64,
    w0: Option<&VectorField2D>,
    tol: f64,
    cap: usize,
) -> Result<LpProx> {
    check_prox_args(kappa, p)?;
    let mut w = w0.unwrap_or(eta).clone();
    let mut residual = lp_prox_residual(&w, eta, kappa, p);
    let mut sweeps = 0;
    while residual > tol && sweeps < cap {
        lp_fixed_point_sweep(&mut w.comp1, &mut w.comp2, &eta.comp1, &eta.comp2, kappa, p);
        sweeps += 1;
        if !w.is_finite() {
            return Err(TvlpError::NonFinite { stage: "L^p fixed-point prox" });
        }
        residual = lp_prox_residual(&w, eta, kappa, p);
    }
    Ok(LpProx { w, residual, sweeps })
}

/// Closed form `eta / (1 + kappa)` of the 2-homogeneous prox.
pub fn phom_prox_p2(eta: &VectorField2D, kappa: f64) -> VectorField2D {
    eta.scaled(1.0 / (1.0 + kappa))
}

/// Root of `kappa s^(p-1) + s = r` for `r >= 0` by safeguarded Newton.
fn phom_magnitude(r: f64, kappa: f64, p: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, r);
    // Start from whichever term dominates.
    let mut s = r.min((r / kappa).powf(1.0 / (p - 1.0)));
    for _ in 0..100 {
        let sp2 = s.powf(p - 2.0);
        let g = kappa * sp2 * s + s - r;
        if g > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let dg = kappa * (p - 1.0) * sp2 + 1.0;
        let mut next = s - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * r.max(1e-300) {
            return next;
        }
        s = next;
    }
    s
}

pub(crate) fn phom_prox_in_place(w1: &mut Array2<f64>, w2: &mut Array2<f64>, kappa: f64, p: f64) {
    if p == 2.0 {
        let c = 1.0 / (1.0 + kappa);
        w1.mapv_inplace(|v| v * c);
        w2.mapv_inplace(|v| v * c);
        return;
    }
    Zip::from(w1).and(w2).for_each(|a, b| {
        let r = a.hypot(*b);
        if r > 0.0 {
            let s = phom_magnitude(r, kappa, p) / r;
            *a *= s;
            *b *= s;
        }
    });
}

/// Exact prox of `(kappa/p) ||w||_p^p`: pixelwise `kappa |w|^(p-2) w + w = eta`.
pub fn phom_prox(eta: &VectorField2D, kappa: f64, p: f64) -> Result<VectorField2D> {
    check_prox_args(kappa, p)?;
    let mut out = eta.clone();
    phom_prox_in_place(&mut out.comp1, &mut out.comp2, kappa, p);
    Ok(out)
}

/// Huber parameters; the quadratic region is `|x| < alpha / beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuberParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HuberParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(invalid(format!("Huber parameters must be positive, got ({alpha}, {beta})")));
        }
        Ok(HuberParams { alpha, beta })
    }

    pub fn threshold(&self) -> f64 {
        self.alpha / self.beta
    }

    fn phi_of_magnitude(&self, r: f64) -> f64 {
        if r >= self.threshold() {
            self.alpha * r - self.alpha * self.alpha / (2.0 * self.beta)
        } else {
            0.5 * self.beta * r * r
        }
    }
}

/// Huber function of the Euclidean length of `x`.
pub fn huber_phi(x: &[f64], params: HuberParams) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    params.phi_of_magnitude(r)
}

/// Minimiser of `alpha |grad u - w| + beta/2 |w|^2` per pixel.
pub fn huber_w_star(grad_u: &VectorField2D, params: HuberParams) -> VectorField2D {
    let thr = params.threshold();
    let mut out = grad_u.clone();
    Zip::from(&mut out.comp1).and(&mut out.comp2).for_each(|a, b| {
        let r = a.hypot(*b);
        if r >= thr {
            let s = thr / r;
            *a *= s;
            *b *= s;
        }
    });
    out
}

/// `sum phi(grad u)`, weighted by the cell volume under quadrature.
pub fn huber_tv_value(u: &Image2D, params: HuberParams, convention: NormConvention) -> f64 {
    let g = gradient(u);
    let weight = convention.weight(u.spacing(), u.dimension());
    let sum: f64 = g
        .comp1
        .iter()
        .zip(g.comp2.iter())
        .map(|(a, b)| params.phi_of_magnitude(a.hypot(*b)))
        .sum();
    sum * weight
}

/// `alpha ||grad u - w||_1 + beta/2 ||w||_2^2` for a given `w`.
pub fn huber_inner_objective(
    grad_u: &VectorField2D,
    w: &VectorField2D,
    params: HuberParams,
    convention: NormConvention,
) -> f64 {
    let (n, m) = grad_u.shape();
    let weight = convention.weight(grad_u.spacing(), if m == 1 { 1 } else { 2 });
    let _ = n;
    let diff = grad_u - w;
    let l1 = raw_field_lp_norm(&diff.comp1, &diff.comp2, 1.0, weight);
    let l2sq = w.dot(w) * weight;
    params.alpha * l1 + 0.5 * params.beta * l2sq
}
