//! Split Bregman solver for discrete TVL^p denoising,
//!
//! ```text
//! min_{u,w} 1/2 ||f - u||^2 + alpha ||grad u - w||_1 + beta R(w),
//! ```
//!
//! with `R(w) = ||w||_p` ([`Homogeneity::OneHomogeneous`]) or
//! `||w||_p^p / p` ([`Homogeneity::PHomogeneous`]), plus the ROF special case
//! and evaluators for the objective and the TVL^p functional.

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::dct::ScreenedPoisson;
use crate::error::{invalid, Result, TvlpError};
use crate::grid::{Homogeneity, Image2D, NormConvention, Sampled, SolveParams, VectorField2D};
use crate::ops::{divergence_raw, gradient, gradient_raw, raw_field_lp_norm};
use crate::prox::{huber_tv_value, lp_fixed_point_sweep, phom_prox_in_place, shrink_in_place, HuberParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    MaxIter,
}

/// Convergence record of one solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective_trace: Vec<f64>,
    /// `||u^{k+1} - u^k|| / ||u^{k+1}||` per outer iteration.
    pub relative_residuals: Vec<f64>,
    pub terminated_by: Termination,
    /// Seconds.
    pub wall_time: f64,
    /// Penalty actually used.
    pub lambda: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.relative_residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.relative_residuals.last().copied().unwrap_or(0.0)
    }
}

/// Parameters of the equivalent problem with unweighted sums.
///
/// Dividing the weighted objective by the cell volume `W = t^d` leaves
/// fidelity and `alpha` untouched and turns `beta ||w||_{p,W}` into
/// `beta W^(1/p - 1) ||w||_p`; the p-homogeneous term is unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub mode: Homogeneity,
}

pub fn discrete_params(params: &SolveParams, convention: NormConvention, spacing: f64, dimension: i32) -> DiscreteParams {
    let weight = convention.weight(spacing, dimension);
    let beta = match params.mode {
        Homogeneity::OneHomogeneous => params.beta * weight.powf(1.0 / params.p - 1.0),
        Homogeneity::PHomogeneous => params.beta,
    };
    DiscreteParams { alpha: params.alpha, beta, p: params.p, mode: params.mode }
}

/// Penalty used for a grid of the given spacing.
///
/// The `10 alpha` / `1000 alpha` rule is stated for unit-spacing differences.
/// Rewriting the penalty term in those units gives `lambda = c alpha t`.
pub fn resolve_lambda(params: &SolveParams, spacing: f64) -> f64 {
    params.lambda.unwrap_or_else(|| params.default_lambda() * spacing)
}

fn check_same_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(TvlpError::ShapeMismatch { expected: a, found: b });
    }
    Ok(())
}

fn regulariser(w: &VectorField2D, params: &SolveParams, weight: f64) -> f64 {
    match params.mode {
        Homogeneity::OneHomogeneous => params.beta * raw_field_lp_norm(&w.comp1, &w.comp2, params.p, weight),
        Homogeneity::PHomogeneous => {
            let norm = raw_field_lp_norm(&w.comp1, &w.comp2, params.p, weight);
            params.beta / params.p * norm.powf(params.p)
        }
    }
}

/// Primal objective `1/2 ||f-u||^2 + alpha ||grad u - w||_1 + beta R(w)`.
pub fn objective(
    u: &Image2D,
    w: &VectorField2D,
    f: &Image2D,
    params: &SolveParams,
    convention: NormConvention,
) -> Result<f64> {
    check_same_shape(f.shape(), u.shape())?;
    check_same_shape(f.shape(), w.shape())?;
    let weight = convention.weight(u.spacing, u.dimension());
    let fidelity = 0.5 * weight * (&f.values - &u.values).mapv(|d| d * d).sum();
    let g = gradient(u);
    let tv = params.alpha * raw_field_lp_norm(&(&g.comp1 - &w.comp1), &(&g.comp2 - &w.comp2), 1.0, weight);
    Ok(fidelity + tv + regulariser(w, params, weight))
}

/// Per-pixel magnitudes of the optimal `w` for fixed `grad u`.
///
/// The optimal `w_i` is parallel to `g_i` with length `s_i` in
/// `[0, |g_i|]`, so the problem reduces to
/// `min_s -alpha sum s_i + beta R(s)` on that box. For the p-homogeneous
/// penalty it separates to `s_i = min(|g_i|, (alpha/beta)^(1/(p-1)))`. For the
/// 1-homogeneous one every unclipped `s_i` equals a common level `c`, fixed by
/// `c gamma^(1/(p-1)) = ||min(|g|, c)||_p`, `gamma = beta W^(1/p-1) / alpha`;
/// no positive root (`gamma >= |supp g|^(1/q)`) means `s = 0`.
pub fn optimal_w_magnitudes(mags: &[f64], params: &SolveParams, weight: f64) -> Vec<f64> {
    let p = params.p;
    match params.mode {
        Homogeneity::PHomogeneous => {
            let cap = (params.alpha / params.beta).powf(1.0 / (p - 1.0));
            mags.iter().map(|&g| g.min(cap)).collect()
        }
        Homogeneity::OneHomogeneous => {
            let gamma = params.beta * weight.powf(1.0 / p - 1.0) / params.alpha;
            let support = mags.iter().filter(|&&g| g > 0.0).count();
            let q = p / (p - 1.0);
            if support == 0 || gamma >= (support as f64).powf(1.0 / q) {
                return vec![0.0; mags.len()];
            }
            let slope = gamma.powf(1.0 / (p - 1.0));
            let clipped_norm = |c: f64| {
                let v: Vec<f64> = mags.iter().map(|&g| (g / c).min(1.0)).collect();
                raw_norm(&v, p)
            };
            // clipped_norm(c) - slope is decreasing in c with a sign change.
            let top = mags.iter().fold(0.0f64, |a, &g| a.max(g));
            let (mut lo, mut hi) = (0.0, top);
            while clipped_norm(hi) > slope {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if clipped_norm(mid) > slope {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-16 * hi {
                    break;
                }
            }
            let c = 0.5 * (lo + hi);
            mags.iter().map(|&g| g.min(c)).collect()
        }
    }
}

fn raw_norm(v: &[f64], p: f64) -> f64 {
    let scale = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Minimiser of `alpha ||g - w||_1 + beta R(w)` over `w` for `g = grad u`.
pub fn optimal_w(u: &Image2D, params: &SolveParams, convention: NormConvention) -> VectorField2D {
    let weight = convention.weight(u.spacing, u.dimension());
    let g = gradient(u);
    let mags = g.magnitude();
    let flat: Vec<f64> = mags.iter().copied().collect();
    let s = optimal_w_magnitudes(&flat, params, weight);
    let scale = Array2::from_shape_vec(mags.dim(), s)
        .expect("shape preserved")
        .iter()
        .zip(mags.iter())
        .map(|(&s, &g)| if g > 0.0 { s / g } else { 0.0 })
        .collect::<Vec<_>>();
    let scale = Array2::from_shape_vec(mags.dim(), scale).expect("shape preserved");
    VectorField2D::from_parts(&g.comp1 * &scale, &g.comp2 * &scale, g.spacing)
}

/// The TVL^p functional `min_w alpha ||Du - w||_1 + beta R(w)`.
///
/// The 2-homogeneous case goes through the Huber closed form; the others
/// through [`optimal_w`].
pub fn tvlp_value(u: &Image2D, params: &SolveParams, convention: NormConvention) -> f64 {
    if params.mode == Homogeneity::PHomogeneous && params.p == 2.0 {
        let huber = HuberParams { alpha: params.alpha, beta: params.beta };
        return huber_tv_value(u, huber, convention);
    }
    let weight = convention.weight(u.spacing, u.dimension());
    let w = optimal_w(u, params, convention);
    let g = gradient(u);
    params.alpha * raw_field_lp_norm(&(&g.comp1 - &w.comp1), &(&g.comp2 - &w.comp2), 1.0, weight)
        + regulariser(&w, params, weight)
}

/// Which auxiliary-field update the loop runs.
#[derive(Clone, Copy)]
enum WStep {
    /// `w` pinned to zero (ROF).
    None,
    FixedPoint { kappa: f64, p: f64, sweeps: usize },
    PHom { kappa: f64, p: f64 },
}

struct Loop {
    alpha: f64,
    lambda: f64,
    tol: f64,
    max_outer: usize,
    w_step: WStep,
}

struct Iterates {
    u: Array2<f64>,
    w1: Array2<f64>,
    w2: Array2<f64>,
    report: SolveReport,
}

fn relative_change(new: &Array2<f64>, old: &Array2<f64>) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    Zip::from(new).and(old).for_each(|&a, &b| {
        diff += (a - b) * (a - b);
        norm += a * a;
    });
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

fn run_loop(
    f: &Image2D,
    cfg: &Loop,
    mut trace_objective: impl FnMut(&Array2<f64>, &Array2<f64>, &Array2<f64>) -> f64,
) -> Result<Iterates> {
    let start = Instant::now();
    let (n, m) = f.shape();
    let t = f.spacing;
    let solver = ScreenedPoisson::new(n, m, cfg.lambda, t)?;
    let fv = &f.values;

    let mut u = fv.clone();
    let (mut z1, mut z2) = gradient_raw(fv, t);
    let mut w1 = Array2::<f64>::zeros((n, m));
    let mut w2 = Array2::<f64>::zeros((n, m));
    let mut b1 = Array2::<f64>::zeros((n, m));
    let mut b2 = Array2::<f64>::zeros((n, m));
    let mut eta1 = Array2::<f64>::zeros((n, m));
    let mut eta2 = Array2::<f64>::zeros((n, m));

    let mut report = SolveReport {
        objective_trace: Vec::new(),
        relative_residuals: Vec::new(),
        terminated_by: Termination::MaxIter,
        wall_time: 0.0,
        lambda: cfg.lambda,
    };
    let shrink_threshold = cfg.alpha / cfg.lambda;

    for k in 0..cfg.max_outer {
        // u: (I - lambda Lap) u = f - lambda div(b + z + w)
        let d = divergence_raw(&(&b1 + &z1 + &w1), &(&b2 + &z2 + &w2), t);
        let mut rhs = fv - &(d * cfg.lambda);
        solver.solve_in_place(&mut rhs);
        let u_new = rhs;
        let (g1, g2) = gradient_raw(&u_new, t);

        // z: shrink(grad u - b - w)
        Zip::from(&mut z1).and(&g1).and(&b1).and(&w1).for_each(|z, &g, &b, &w| *z = g - b - w);
        Zip::from(&mut z2).and(&g2).and(&b2).and(&w2).for_each(|z, &g, &b, &w| *z = g - b - w);
        shrink_in_place(&mut z1, &mut z2, shrink_threshold);

        // w: prox of the regulariser at eta = grad u - b - z
        match cfg.w_step {
            WStep::None => {}
            WStep::FixedPoint { kappa, p, sweeps } => {
                Zip::from(&mut eta1).and(&g1).and(&b1).and(&z1).for_each(|e, &g, &b, &z| *e = g - b - z);
                Zip::from(&mut eta2).and(&g2).and(&b2).and(&z2).for_each(|e, &g, &b, &z| *e = g - b - z);
                for _ in 0..sweeps {
                    lp_fixed_point_sweep(&mut w1, &mut w2, &eta1, &eta2, kappa, p);
                }
            }
            WStep::PHom { kappa, p } => {
                Zip::from(&mut w1).and(&g1).and(&b1).and(&z1).for_each(|e, &g, &b, &z| *e = g - b - z);
                Zip::from(&mut w2).and(&g2).and(&b2).and(&z2).for_each(|e, &g, &b, &z| *e = g - b - z);
                phom_prox_in_place(&mut w1, &mut w2, kappa, p);
            }
        }

        // b: b + z - grad u + w
        Zip::from(&mut b1).and(&z1).and(&g1).and(&w1).for_each(|b, &z, &g, &w| *b += z - g + w);
        Zip::from(&mut b2).and(&z2).and(&g2).and(&w2).for_each(|b, &z, &g, &w| *b += z - g + w);

        let residual = relative_change(&u_new, &u);
        u = u_new;
        if !residual.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(TvlpError::NonFinite { stage: "split Bregman iteration" });
        }
        report.relative_residuals.push(residual);
        report.objective_trace.push(trace_objective(&u, &w1, &w2));
        // With z = grad f the first u-update returns f itself, so the first
        // residual is always zero.
        if k > 0 && residual <= cfg.tol {
            report.terminated_by = Termination::Tolerance;
            break;
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(Iterates { u, w1, w2, report })
}

fn check_input(f: &Image2D) -> Result<()> {
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(TvlpError::NonFinite { stage: "input image" });
    }
    Ok(())
}

/// TVL^p denoising of `f` by split Bregman.
///
/// Returns the image `u`, the auxiliary field `w`, and the convergence
/// report. Hitting `max_outer` is reported, not an error.
pub fn denoise(f: &Image2D, params: &SolveParams) -> Result<(Image2D, VectorField2D, SolveReport)> {
    params.validate()?;
    check_input(f)?;
    let convention = params.resolve_convention(f);
    let disc = discrete_params(params, convention, f.spacing, f.dimension());
    let lambda = resolve_lambda(params, f.spacing);
    let kappa = disc.beta / lambda;
    let w_step = match disc.mode {
        Homogeneity::OneHomogeneous => WStep::FixedPoint { kappa, p: disc.p, sweeps: params.inner_fp_iters },
        Homogeneity::PHomogeneous => WStep::PHom { kappa, p: disc.p },
    };
    let cfg = Loop { alpha: disc.alpha, lambda, tol: params.tol, max_outer: params.max_outer, w_step };
    let t = f.spacing;
    let it = run_loop(f, &cfg, |u, w1, w2| {
        let u = Image2D::from_parts(u.clone(), t);
        let w = VectorField2D::from_parts(w1.clone(), w2.clone(), t);
        objective(&u, &w, f, params, convention).unwrap_or(f64::NAN)
    })?;
    Ok((
        Image2D::from_parts(it.u, t),
        VectorField2D::from_parts(it.w1, it.w2, t),
        it.report,
    ))
}

/// ROF denoising `min 1/2 ||f - u||^2 + alpha ||Du||_1`: the same loop with
/// `w` pinned to zero.
pub fn denoise_rof(f: &Image2D, alpha: f64, lambda: f64, tol: f64, max_outer: usize) -> Result<(Image2D, SolveReport)> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) || max_outer == 0 {
        return Err(invalid("tol and max_outer must be positive"));
    }
    check_input(f)?;
    let cfg = Loop { alpha, lambda, tol, max_outer, w_step: WStep::None };
    let t = f.spacing;
    let fv = f.values.clone();
    let it = run_loop(f, &cfg, |u, _, _| {
        let (g1, g2) = gradient_raw(u, t);
        0.5 * (&fv - u).mapv(|d| d * d).sum() + alpha * raw_field_lp_norm(&g1, &g2, 1.0, 1.0)
    })?;
    Ok((Image2D::from_parts(it.u, t), it.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mean_value, Grid1D};
    use crate::ops::tv_value;
    use approx::assert_relative_eq;

    fn step(n: usize) -> Image2D {
        Grid1D::sample(-1.0, 1.0, n, |x| if x <= 0.0 { 0.0 } else { 100.0 }).unwrap().to_image()
    }

    fn wavy(n: usize, m: usize) -> Image2D {
        Image2D::from_fn(n, m, 1.0, |i, j| ((i * 7 + j * 13) % 5) as f64 * 0.3 + (i as f64 * 0.4).sin()).unwrap()
    }

    #[test]
    fn objective_at_u_equal_f() {
        let f = wavy(6, 5);
        let params = SolveParams::new(0.7, 2.0, 3.0).unwrap();
        let w = VectorField2D::zeros(f.shape(), 1.0);
        for conv in [NormConvention::Discrete, NormConvention::Quadrature] {
            let obj = objective(&f, &w, &f, &params, conv).unwrap();
            assert_relative_eq!(obj, 0.7 * tv_value(&f, conv), epsilon = 1e-12);
        }
    }

    #[test]
    fn objective_of_constant_is_zero() {
        let f = Image2D::constant(4, 4, 1.0, 2.5).unwrap();
        let u = Image2D::constant(4, 4, 1.0, mean_value(&f)).unwrap();
        let w = VectorField2D::zeros((4, 4), 1.0);
        let params = SolveParams::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(objective(&u, &w, &f, &params, NormConvention::Discrete).unwrap(), 0.0);
    }

    #[test]
    fn objective_matches_term_by_term_sum() {
        let f = wavy(5, 4);
        let u = Image2D::from_fn(5, 4, 1.0, |i, j| (i as f64 - j as f64) * 0.25).unwrap();
        let w = VectorField2D::new(
            Array2::from_shape_fn((5, 4), |(i, j)| ((i + j) % 3) as f64 * 0.1),
            Array2::from_shape_fn((5, 4), |(i, j)| ((i * j) % 4) as f64 * -0.05),
            1.0,
        )
        .unwrap();
        let params = SolveParams::new(0.4, 1.3, 1.5).unwrap();
        let mut fid = 0.0;
        let mut tv = 0.0;
        let mut wp = 0.0;
        for i in 0..5 {
            for j in 0..4 {
                fid += 0.5 * (f.values[[i, j]] - u.values[[i, j]]).powi(2);
                let g1 = if i < 4 { u.values[[i + 1, j]] - u.values[[i, j]] } else { 0.0 };
                let g2 = if j < 3 { u.values[[i, j + 1]] - u.values[[i, j]] } else { 0.0 };
                let (a, b) = (w.comp1()[[i, j]], w.comp2()[[i, j]]);
                tv += ((g1 - a).powi(2) + (g2 - b).powi(2)).sqrt();
                wp += (a * a + b * b).sqrt().powf(1.5);
            }
        }
        let expected = fid + 0.4 * tv + 1.3 * wp.powf(1.0 / 1.5);
        let got = objective(&u, &w, &f, &params, NormConvention::Discrete).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn objective_rejects_shape_mismatch() {
        let f = wavy(4, 4);
        let u = wavy(4, 3);
        let w = VectorField2D::zeros((4, 4), 1.0);
        let params = SolveParams::new(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(
            objective(&u, &w, &f, &params, NormConvention::Discrete),
            Err(TvlpError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn tvlp_value_bounds() {
        let c = Image2D::constant(5, 5, 1.0, 3.0).unwrap();
        let params = SolveParams::new(1.0, 0.5, 2.0).unwrap();
        assert_eq!(tvlp_value(&c, &params, NormConvention::Discrete), 0.0);
        let u = wavy(6, 6);
        for p in [1.5, 2.0, 4.0] {
            for mode in [Homogeneity::OneHomogeneous, Homogeneity::PHomogeneous] {
                let params = SolveParams::new(1.0, 0.5, p).unwrap().with_mode(mode);
                let v = tvlp_value(&u, &params, NormConvention::Discrete);
                assert!(v <= tv_value(&u, NormConvention::Discrete) + 1e-12);
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn tvlp_value_huber_route_agrees_with_reduction() {
        let u = Grid1D::new(vec![0.0, 0.3, 1.7, 1.6, -0.4, 0.9, 2.2, 2.0], 0.125, 0.0).unwrap().to_image();
        let params = SolveParams::new(0.8, 3.0, 2.0).unwrap().with_mode(Homogeneity::PHomogeneous);
        for conv in [NormConvention::Discrete, NormConvention::Quadrature] {
            let huber = tvlp_value(&u, &params, conv);
            let weight = conv.weight(u.spacing, 1);
            let w = optimal_w(&u, &params, conv);
            let g = gradient(&u);
            let direct = params.alpha * raw_field_lp_norm(&(&g.comp1 - &w.comp1), &(&g.comp2 - &w.comp2), 1.0, weight)
                + regulariser(&w, &params, weight);
            assert!((huber - direct).abs() <= 1e-6 * huber.abs().max(1.0));
        }
    }

    #[test]
    fn constant_input_is_a_fixed_point() {
        let f = Image2D::constant(8, 6, 1.0, 4.0).unwrap();
        let params = SolveParams::new(1.0, 2.0, 2.0).unwrap();
        let (u, w, report) = denoise(&f, &params).unwrap();
        assert!(u.max_abs_diff(&f) <= 1e-12);
        assert!(w.magnitude().iter().all(|&v| v == 0.0));
        assert!(report.iterations() <= 2);
        assert_eq!(report.terminated_by, Termination::Tolerance);

        let (u, _) = denoise_rof(&f, 1.0, 10.0, 1e-6, 100).unwrap();
        assert!(u.max_abs_diff(&f) <= 1e-12);
    }

    #[test]
    fn step_rof_regime() {
        let f = step(400);
        let params = SolveParams::new(15.0, 500.0, 2.0).unwrap().with_tol(1e-8).with_max_outer(50_000);
        let (u, w, report) = denoise(&f, &params).unwrap();
        assert_eq!(report.terminated_by, Termination::Tolerance);
        assert!(w.magnitude().iter().all(|&v| v == 0.0));
        for i in 0..400 {
            let expected = if i < 200 { 15.0 } else { 85.0 };
            assert!((u.values[[i, 0]] - expected).abs() <= 1e-2);
        }
    }

    #[test]
    fn step_mean_regime() {
        let f = step(400);
        let params = SolveParams::new(60.0, 1300.0, 2.0).unwrap().with_tol(1e-8).with_max_outer(50_000);
        let (u, _, _) = denoise(&f, &params).unwrap();
        assert!(u.values.iter().all(|&v| (v - 50.0).abs() <= 1e-2));
    }

    #[test]
    fn rof_and_tvlp_agree_above_threshold() {
        // |Omega|^(1/q) = sqrt(2) for the step on (-1, 1).
        let f = step(400);
        let alpha = 15.0;
        let beta = 1.5 * alpha * 2f64.sqrt();
        let params = SolveParams::new(alpha, beta, 2.0).unwrap().with_tol(1e-9).with_max_outer(100_000);
        let (u, _, _) = denoise(&f, &params).unwrap();
        let lambda = resolve_lambda(&params, f.spacing);
        let (r, _) = denoise_rof(&f, alpha, lambda, 1e-9, 100_000).unwrap();
        assert!(u.max_abs_diff(&r) <= 1e-3 * f.range());
    }

    #[test]
    fn never_loses_to_trivial_candidates() {
        let f = wavy(12, 10);
        let conv = NormConvention::Discrete;
        for (p, mode) in [(1.5, Homogeneity::OneHomogeneous), (2.0, Homogeneity::PHomogeneous), (3.0, Homogeneity::OneHomogeneous)] {
            let params = SolveParams::new(0.3, 0.6, p).unwrap().with_mode(mode).with_tol(1e-9).with_max_outer(20_000);
            let (u, w, _) = denoise(&f, &params).unwrap();
            let zero = VectorField2D::zeros(f.shape(), 1.0);
            let mean = Image2D::constant(12, 10, 1.0, mean_value(&f)).unwrap();
            let best_trivial = objective(&f, &zero, &f, &params, conv)
                .unwrap()
                .min(objective(&mean, &zero, &f, &params, conv).unwrap());
            let got = objective(&u, &w, &f, &params, conv).unwrap();
            assert!(got <= best_trivial + 1e-6 * best_trivial, "p = {p}: {got} vs {best_trivial}");
        }
    }

    #[test]
    fn discrete_params_rescale_only_one_homogeneous_beta() {
        let params = SolveParams::new(2.0, 3.0, 2.0).unwrap();
        let d = discrete_params(&params, NormConvention::Quadrature, 0.01, 1);
        assert_relative_eq!(d.beta, 3.0 * 0.01f64.powf(-0.5), epsilon = 1e-12);
        let d = discrete_params(&params.clone().with_mode(Homogeneity::PHomogeneous), NormConvention::Quadrature, 0.01, 1);
        assert_eq!(d.beta, 3.0);
        let d = discrete_params(&params, NormConvention::Discrete, 0.01, 1);
        assert_eq!(d.beta, 3.0);
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut v = Array2::zeros((3, 3));
        v[[1, 1]] = f64::NAN;
        let f = Image2D::from_parts(v, 1.0);
        let params = SolveParams::new(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(denoise(&f, &params), Err(TvlpError::NonFinite { .. })));
    }
}
