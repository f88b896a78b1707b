//! Decomposition `f ~ u + v` by
//!
//! ```text
//! min_{u,v} 1/2 ||f - u - v||^2 + alpha ||grad u||_1 + beta R(grad v),
//! ```
//!
//! with `u` piecewise constant and `v` smooth. Only `grad v` is penalised,
//! so `v` is normalised to zero mean.
//!
//! Both gradients are split off at once (`d = grad u`, `e = grad v`); the
//! coupled linear step for `(u, v)` is diagonal in the cosine basis.

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::dct::CoupledPair;
use crate::error::{invalid, Result, TvlpError};
use crate::grid::{Homogeneity, Image2D, NormConvention, Sampled, SolveParams};
use crate::ops::{divergence_raw, gradient_raw, raw_field_lp_norm};
use crate::prox::{lp_fixed_point_sweep, phom_prox_in_place, shrink_in_place};
use crate::solver::{discrete_params, resolve_lambda, SolveReport, Termination};

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Piecewise constant part.
    pub u_part: Image2D,
    /// Smooth part, zero mean.
    pub v_part: Image2D,
    pub report: SolveReport,
}

impl Decomposition {
    /// `u + v`, the denoised image.
    pub fn sum(&self) -> Image2D {
        Image2D::from_parts(&self.u_part.values + &self.v_part.values, self.u_part.spacing)
    }
}

/// `1/2 ||f-u-v||^2 + alpha ||grad u||_1 + beta R(grad v)` under `convention`.
pub fn decomposition_objective(
    f: &Image2D,
    u: &Image2D,
    v: &Image2D,
    params: &SolveParams,
    convention: NormConvention,
) -> Result<f64> {
    f.ensure_same_shape(u)?;
    f.ensure_same_shape(v)?;
    let t = f.spacing;
    let weight = convention.weight(t, f.dimension());
    Ok(raw_objective(&f.values, &u.values, &v.values, params, weight, t))
}

fn raw_objective(f: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, params: &SolveParams, weight: f64, t: f64) -> f64 {
    let mut fid = 0.0;
    Zip::from(f).and(u).and(v).for_each(|&f, &u, &v| fid += (f - u - v) * (f - u - v));
    let (gu1, gu2) = gradient_raw(u, t);
    let (gv1, gv2) = gradient_raw(v, t);
    let norm = raw_field_lp_norm(&gv1, &gv2, params.p, weight);
    let reg = match params.mode {
        Homogeneity::OneHomogeneous => params.beta * norm,
        Homogeneity::PHomogeneous => params.beta / params.p * norm.powf(params.p),
    };
    0.5 * weight * fid + params.alpha * raw_field_lp_norm(&gu1, &gu2, 1.0, weight) + reg
}

/// Decomposes `f` starting from `v = 0`.
pub fn decompose(f: &Image2D, params: &SolveParams) -> Result<Decomposition> {
    let (n, m) = f.shape();
    decompose_from(f, params, &Image2D::constant(n, m, f.spacing, 0.0)?)
}

/// Decomposes `f` starting from `u = f - v0`, `v = v0 - mean(v0)`.
///
/// Penalty, tolerance and iteration caps come from `params` exactly as in
/// [`crate::solver::denoise`]; the stopping test is on the relative change
/// of `u + v`.
pub fn decompose_from(f: &Image2D, params: &SolveParams, v0: &Image2D) -> Result<Decomposition> {
    params.validate()?;
    f.ensure_same_shape(v0)?;
    if f.values.iter().chain(v0.values.iter()).any(|v| !v.is_finite()) {
        return Err(TvlpError::NonFinite { stage: "input image" });
    }
    let start = Instant::now();
    let convention = params.resolve_convention(f);
    let disc = discrete_params(params, convention, f.spacing, f.dimension());
    let lambda = resolve_lambda(params, f.spacing);
    let weight = convention.weight(f.spacing, f.dimension());
    let t = f.spacing;
    let (n, m) = f.shape();
    let pair = CoupledPair::new(n, m, lambda, t);
    let fv = &f.values;

    let mean_v0 = v0.values.mean().unwrap_or(0.0);
    let mut v = v0.values.mapv(|x| x - mean_v0);
    let mut u = fv - &v;
    let (mut d1, mut d2) = gradient_raw(&u, t);
    let (mut e1, mut e2) = gradient_raw(&v, t);
    let zeros = || Array2::<f64>::zeros((n, m));
    let (mut b1, mut b2, mut c1, mut c2) = (zeros(), zeros(), zeros(), zeros());
    let (mut eta1, mut eta2) = (zeros(), zeros());
    let mut sum = fv.clone();

    let mut report = SolveReport {
        objective_trace: Vec::new(),
        relative_residuals: Vec::new(),
        terminated_by: Termination::MaxIter,
        wall_time: 0.0,
        lambda,
    };
    let kappa = disc.beta / lambda;
    for k in 0..params.max_outer {
        // (I - lambda Lap) u + v = f - lambda div(d - b)
        // u + (I - lambda Lap) v = f - lambda div(e - c)
        let mut r1 = fv - &(divergence_raw(&(&d1 - &b1), &(&d2 - &b2), t) * lambda);
        let mut r2 = fv - &(divergence_raw(&(&e1 - &c1), &(&e2 - &c2), t) * lambda);
        pair.solve(&mut r1, &mut r2);
        u = r1;
        v = r2;
        let (gu1, gu2) = gradient_raw(&u, t);
        let (gv1, gv2) = gradient_raw(&v, t);

        Zip::from(&mut d1).and(&gu1).and(&b1).for_each(|d, &g, &b| *d = g + b);
        Zip::from(&mut d2).and(&gu2).and(&b2).for_each(|d, &g, &b| *d = g + b);
        shrink_in_place(&mut d1, &mut d2, disc.alpha / lambda);

        match disc.mode {
            Homogeneity::OneHomogeneous => {
                Zip::from(&mut eta1).and(&gv1).and(&c1).for_each(|e, &g, &c| *e = g + c);
                Zip::from(&mut eta2).and(&gv2).and(&c2).for_each(|e, &g, &c| *e = g + c);
                for _ in 0..params.inner_fp_iters {
                    lp_fixed_point_sweep(&mut e1, &mut e2, &eta1, &eta2, kappa, disc.p);
                }
            }
            Homogeneity::PHomogeneous => {
                Zip::from(&mut e1).and(&gv1).and(&c1).for_each(|e, &g, &c| *e = g + c);
                Zip::from(&mut e2).and(&gv2).and(&c2).for_each(|e, &g, &c| *e = g + c);
                phom_prox_in_place(&mut e1, &mut e2, kappa, disc.p);
            }
        }

        Zip::from(&mut b1).and(&gu1).and(&d1).for_each(|b, &g, &d| *b += g - d);
        Zip::from(&mut b2).and(&gu2).and(&d2).for_each(|b, &g, &d| *b += g - d);
        Zip::from(&mut c1).and(&gv1).and(&e1).for_each(|c, &g, &e| *c += g - e);
        Zip::from(&mut c2).and(&gv2).and(&e2).for_each(|c, &g, &e| *c += g - e);

        let new_sum = &u + &v;
        let (mut diff, mut norm) = (0.0, 0.0);
        Zip::from(&new_sum).and(&sum).for_each(|&a, &b| {
            diff += (a - b) * (a - b);
            norm += a * a;
        });
        let residual = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
        sum = new_sum;
        if !residual.is_finite() {
            return Err(TvlpError::NonFinite { stage: "decomposition iteration" });
        }
        report.relative_residuals.push(residual);
        report.objective_trace.push(raw_objective(fv, &u, &v, params, weight, t));
        // The first linear step reproduces the initial split, so its residual
        // carries no information.
        if k > 0 && residual <= params.tol {
            report.terminated_by = Termination::Tolerance;
            break;
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(Decomposition {
        u_part: Image2D::from_parts(u, t),
        v_part: Image2D::from_parts(v, t),
        report,
    })
}

/// Agreement between decompositions from different starting points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub restarts: usize,
    /// `max |(u_r + v_r) - (u_0 + v_0)|` over restarts.
    pub max_sum_difference: f64,
    pub range: f64,
    /// Least-squares `mu_r` with `grad v_r ~ mu_r grad v_0`.
    pub mu: Vec<f64>,
    /// `||grad v_r - mu_r grad v_0|| / ||grad v_r||`, zero when `grad v_r = 0`.
    pub mu_residual: Vec<f64>,
}

impl UniquenessReport {
    /// `max_sum_difference <= rel * range`.
    pub fn sums_agree(&self, rel: f64) -> bool {
        self.max_sum_difference <= rel * self.range
    }
}

/// Starting `v` for restart `r`: zero, then the data itself, then smooth
/// zero-mean bumps of growing frequency scaled to the data range.
fn restart_start(f: &Image2D, r: usize) -> Image2D {
    match r {
        0 => f.map(|_| 0.0).expect("finite"),
        1 => f.clone(),
        _ => {
            let (n, m) = f.shape();
            let amp = f.range().max(1.0);
            let k = (r - 1) as f64;
            Image2D::from_parts(
                Array2::from_shape_fn((n, m), |(i, j)| {
                    let y = (i as f64 + 0.5) / n as f64;
                    let x = (j as f64 + 0.5) / m as f64;
                    amp * (std::f64::consts::PI * k * y).cos() * (std::f64::consts::PI * x).cos()
                }),
                f.spacing,
            )
        }
    }
}

/// Runs `n_restarts` decompositions from different starting points and
/// compares them.
pub fn check_decomposition_uniqueness(f: &Image2D, params: &SolveParams, n_restarts: usize) -> Result<UniquenessReport> {
    if n_restarts < 2 {
        return Err(invalid(format!("need at least 2 restarts, got {n_restarts}")));
    }
    let t = f.spacing;
    let runs = (0..n_restarts).map(|r| decompose_from(f, params, &restart_start(f, r))).collect::<Result<Vec<_>>>()?;
    let base_sum = runs[0].sum();
    let (g1, g2) = gradient_raw(&runs[0].v_part.values, t);
    let base_sq = (&g1 * &g1).sum() + (&g2 * &g2).sum();
    let mut report = UniquenessReport {
        restarts: n_restarts,
        max_sum_difference: 0.0,
        range: f.range(),
        mu: Vec::new(),
        mu_residual: Vec::new(),
    };
    for run in &runs[1..] {
        report.max_sum_difference = report.max_sum_difference.max(run.sum().max_abs_diff(&base_sum));
        let (h1, h2) = gradient_raw(&run.v_part.values, t);
        let cross = (&h1 * &g1).sum() + (&h2 * &g2).sum();
        let own = (&h1 * &h1).sum() + (&h2 * &h2).sum();
        let mu = if base_sq > 0.0 { cross / base_sq } else { 0.0 };
        let res_sq = (own - 2.0 * mu * cross + mu * mu * base_sq).max(0.0);
        report.mu.push(mu);
        report.mu_residual.push(if own > 0.0 { (res_sq / own).sqrt() } else { 0.0 });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::solver::denoise;

    fn mix(n: usize) -> Image2D {
        Grid1D::sample(-1.0, 1.0, n, crate::phantom::piecewise_mix).unwrap().to_image()
    }

    fn params() -> SolveParams {
        SolveParams::new(2.0, 1.0, 2.0).unwrap().with_tol(1e-9).with_max_outer(20000)
    }

    #[test]
    fn constant_input() {
        let f = Image2D::constant(10, 8, 1.0, 0.7).unwrap();
        let d = decompose(&f, &SolveParams::new(0.1, 1.0, 2.0).unwrap()).unwrap();
        assert!(d.sum().max_abs_diff(&f) <= 1e-12);
        assert!(d.v_part.max_abs() <= 1e-12);
    }

    #[test]
    fn v_has_zero_mean_and_beats_trivial_splits() {
        let f = mix(200);
        let p = params();
        let d = decompose(&f, &p).unwrap();
        assert!(d.v_part.values().mean().unwrap().abs() <= 1e-10);
        let conv = p.resolve_convention(&f);
        let zero = f.map(|_| 0.0).unwrap();
        let obj = decomposition_objective(&f, &d.u_part, &d.v_part, &p, conv).unwrap();
        assert!(obj <= decomposition_objective(&f, &f, &zero, &p, conv).unwrap());
        assert!(obj <= decomposition_objective(&f, &zero, &f, &p, conv).unwrap());
    }

    #[test]
    fn sum_matches_tvlp_in_1d() {
        let f = mix(200);
        let p = params();
        let d = decompose(&f, &p).unwrap();
        let (u, w, _) = denoise(&f, &p).unwrap();
        let err = d.sum().max_abs_diff(&u);
        assert!(err <= 1e-2 * f.range(), "{err}");
        let (gv, _) = gradient_raw(&d.v_part.values, f.spacing);
        let diff = (&gv - w.comp1()).mapv(|x| x * x).sum().sqrt() / w.comp1().mapv(|x| x * x).sum().sqrt();
        assert!(diff <= 0.05, "{diff}");
    }

    #[test]
    fn restarts_agree() {
        let f = mix(200);
        let r = check_decomposition_uniqueness(&f, &params(), 3).unwrap();
        assert!(r.sums_agree(1e-3), "{r:?}");
        assert!(check_decomposition_uniqueness(&f, &params(), 1).is_err());
    }
}
