//! Closed-form results for the 1D step problem on `(-L, L)`
//! (`f = 0` on `(-L, 0]`, `h` on `(0, L)`): regime thresholds, the exact
//! 2-homogeneous solutions, the homogeneity map, and a dual-certificate
//! checker for arbitrary 1D candidates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvlpError};
use crate::grid::{mean_value, Grid1D, Homogeneity, NormConvention, Sampled, SolveParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepModel {
    /// `beta ||w||_p`
    OneHom,
    /// `beta/2 ||w||_2^2` (requires `p = 2`)
    TwoHom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepProblem {
    pub h: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub model: StepModel,
}

impl StepProblem {
    pub fn new(h: f64, l: f64, alpha: f64, beta: f64, p: f64, model: StepModel) -> Result<Self> {
        let problem = StepProblem { h, l, alpha, beta, p, model };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h", self.h), ("L", self.l), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(invalid(format!("p must lie in (1, inf), got {}", self.p)));
        }
        if self.model == StepModel::TwoHom && self.p != 2.0 {
            return Err(invalid("the 2-homogeneous model needs p = 2"));
        }
        Ok(())
    }

    fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `f(x)`.
    pub fn data(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.h
        }
    }

    /// The step sampled at `n` cell centres of `(-L, L)`.
    pub fn sample(&self, n: usize) -> Result<Grid1D> {
        Grid1D::sample(-self.l, self.l, n, |x| self.data(x))
    }

    /// Matching solver parameters (quadrature convention).
    pub fn solve_params(&self) -> Result<SolveParams> {
        let mode = match self.model {
            StepModel::OneHom => Homogeneity::OneHomogeneous,
            StepModel::TwoHom => Homogeneity::PHomogeneous,
        };
        Ok(SolveParams::new(self.alpha, self.beta, self.p)?
            .with_mode(mode)
            .with_convention(NormConvention::Quadrature))
    }

    fn with_two_hom_beta(&self, beta: f64) -> StepProblem {
        StepProblem { beta, p: 2.0, model: StepModel::TwoHom, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRegime {
    PiecewiseConstantROF,
    ConstantMean,
    ContinuousExponential,
    DiscontinuousExponential,
}

/// Exact solution of a step problem.
///
/// In the exponential regimes `u = c1 e^{kx} + c2 e^{-kx}` on `(-L, 0]` and
/// `u(x) = h - u(-x)` on `(0, L)`, with `c1 = c2 e^{2kL}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepAnalytic {
    pub regime: StepRegime,
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    pub h: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    /// `beta` of the 2-homogeneous problem with the same solution
    /// (infinite in the `w = 0` regimes).
    pub beta_two_hom: f64,
}

impl StepAnalytic {
    fn left_u(&self, x: f64) -> f64 {
        match self.regime {
            StepRegime::PiecewiseConstantROF => self.alpha / self.l,
            StepRegime::ConstantMean => self.h / 2.0,
            _ => self.c1 * ((self.k * x).exp() + (-self.k * (2.0 * self.l + x)).exp()),
        }
    }

    fn left_w(&self, x: f64) -> f64 {
        match self.regime {
            StepRegime::PiecewiseConstantROF | StepRegime::ConstantMean => 0.0,
            _ => self.k * self.c1 * ((self.k * x).exp() - (-self.k * (2.0 * self.l + x)).exp()),
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.left_u(x)
        } else {
            self.h - self.left_u(-x)
        }
    }

    /// The optimal auxiliary field, equal to `u'` in the exponential regimes.
    pub fn w(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.left_w(x)
        } else {
            self.left_w(-x)
        }
    }

    /// Values just left and right of the jump.
    pub fn jump(&self) -> (f64, f64) {
        (self.left_u(0.0), self.h - self.left_u(0.0))
    }

    /// `||w||_{L^2(-L, L)}`.
    pub fn w_norm(&self) -> f64 {
        match self.regime {
            StepRegime::PiecewiseConstantROF | StepRegime::ConstantMean => 0.0,
            _ => {
                let a = 2.0 * self.k * self.l;
                self.c1 * (2.0 * self.k).sqrt() * scaled_sinh_excess(a).sqrt()
            }
        }
    }

    /// Samples `u` at the cell centres of `grid`.
    pub fn sample_u(&self, grid: &Grid1D) -> Result<Grid1D> {
        grid.with_values(grid.coordinates().mapv(|x| self.u(x)))
    }

    pub fn sample_w(&self, grid: &Grid1D) -> Result<Grid1D> {
        grid.with_values(grid.coordinates().mapv(|x| self.w(x)))
    }
}

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `beta/alpha >= |Omega|^(1/q)`: sufficient for the TVL^p solution to be
/// the ROF solution.
pub fn rof_region(alpha: f64, beta: f64, p: f64, omega_measure: f64) -> bool {
    let q = p / (p - 1.0);
    beta / alpha >= omega_measure.powf(1.0 / q)
}

/// `alpha >= ||f - mean f||_1` and `beta >= |Omega|^(1/q) ||f - mean f||_1`
/// (quadrature-weighted): sufficient for the solution to be the mean.
pub fn mean_region(f: &Grid1D, alpha: f64, beta: f64, q: f64) -> bool {
    let mean = mean_value(f);
    let dev: f64 = f.samples().map(|v| (v - mean).abs()).sum::<f64>() * f.spacing();
    alpha >= dev && beta >= f.measure().powf(1.0 / q) * dev
}

fn two_hom_regime(problem: &StepProblem, k: f64) -> StepRegime {
    let kl = problem.l * k;
    if kl.tanh() / k < 2.0 * problem.alpha / problem.h {
        StepRegime::ContinuousExponential
    } else {
        StepRegime::DiscontinuousExponential
    }
}

/// `e^{-a} (sinh a - a)` without cancellation or overflow.
fn scaled_sinh_excess(a: f64) -> f64 {
    if a < 0.5 {
        let a2 = a * a;
        let series = a * a2 / 6.0 * (1.0 + a2 / 20.0 * (1.0 + a2 / 42.0 * (1.0 + a2 / 72.0 * (1.0 + a2 / 110.0))));
        (-a).exp() * series
    } else {
        -0.5 * (-2.0 * a).exp_m1() - a * (-a).exp()
    }
}

fn two_hom_solution(problem: &StepProblem) -> StepAnalytic {
    let k = 1.0 / problem.beta.sqrt();
    let regime = two_hom_regime(problem, k);
    // c2 = c1 e^{-2kL}; written through the decaying exponential so large k
    // does not overflow.
    let d = (-2.0 * k * problem.l).exp();
    let c1 = match regime {
        StepRegime::ContinuousExponential => problem.h / (2.0 * (1.0 + d)),
        _ => -problem.alpha * k / (-2.0 * k * problem.l).exp_m1(),
    };
    StepAnalytic {
        regime,
        k,
        c1,
        c2: c1 * d,
        h: problem.h,
        l: problem.l,
        alpha: problem.alpha,
        beta_two_hom: problem.beta,
    }
}

/// Exact 2-homogeneous (`p = 2`) solution of the step problem.
pub fn step_exact_2hom(problem: &StepProblem) -> Result<StepAnalytic> {
    problem.validate()?;
    if problem.p != 2.0 {
        return Err(invalid(format!("closed form needs p = 2, got {}", problem.p)));
    }
    Ok(two_hom_solution(&problem.with_two_hom_beta(problem.beta)))
}

/// `||w||_2` of the exact 2-homogeneous solution.
pub fn w_norm_2hom(problem: &StepProblem) -> Result<f64> {
    Ok(step_exact_2hom(problem)?.w_norm())
}

/// `beta_1 = beta_p ||w||^(p-1)`.
pub fn beta_map(beta_phom: f64, w_norm: f64, p: f64) -> Result<f64> {
    if !(w_norm.is_finite() && w_norm > 0.0) {
        return Err(invalid(format!("the map needs ||w|| > 0, got {w_norm}")));
    }
    check_positive(&[("beta", beta_phom)])?;
    Ok(beta_phom * w_norm.powf(p - 1.0))
}

/// Taylor estimate `h L^3 / (3 (h L - 2 alpha))` of the `beta` separating
/// the continuous and discontinuous 2-homogeneous regimes.
pub fn taylor_beta_boundary(alpha: f64, h: f64, l: f64) -> Result<f64> {
    check_positive(&[("alpha", alpha), ("h", h), ("L", l)])?;
    let gap = h * l - 2.0 * alpha;
    if gap == 0.0 {
        return Err(invalid("alpha = hL/2 is the asymptote of the boundary"));
    }
    Ok(h * l.powi(3) / (3.0 * gap))
}

fn pc_threshold(problem: &StepProblem) -> bool {
    let q = problem.q();
    problem.beta / problem.alpha >= (2.0 * problem.l / (q + 1.0)).powf(1.0 / q)
}

fn c_threshold(problem: &StepProblem) -> bool {
    let q = problem.q();
    problem.alpha >= problem.h * problem.l / 2.0
        && problem.beta >= problem.h / 2.0 * (2.0 * problem.l.powf(q + 1.0) / (q + 1.0)).powf(1.0 / q)
}

/// 2-homogeneous `beta` whose solution has `beta ||w||_2 = beta_one`, or
/// `None` if `beta_one` is at or above the supremum of that map.
fn inverse_beta_map(problem: &StepProblem, beta_one: f64) -> Option<f64> {
    let value = |b: f64| b * two_hom_solution(&problem.with_two_hom_beta(b)).w_norm();
    // beta ||w|| increases in beta; bracket in log scale.
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while value(lo) > beta_one {
        lo *= 1e-3;
        if lo < 1e-300 {
            return None;
        }
    }
    let mut grow = 0;
    while value(hi) < beta_one {
        lo = hi;
        hi *= 10.0;
        grow += 1;
        if grow > 300 || !value(hi).is_finite() {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if value(mid) < beta_one {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Some((lo * hi).sqrt())
}

/// Exact solution of any step problem with a closed form: the `w = 0`
/// regimes for every `p`, the 2-homogeneous problem, and the 1-homogeneous
/// `p = 2` problem through the inverse homogeneity map.
pub fn step_solution(problem: &StepProblem) -> Result<StepAnalytic> {
    problem.validate()?;
    if problem.model == StepModel::TwoHom {
        return step_exact_2hom(problem);
    }
    let trivial = |regime| StepAnalytic {
        regime,
        k: 0.0,
        c1: 0.0,
        c2: 0.0,
        h: problem.h,
        l: problem.l,
        alpha: problem.alpha,
        beta_two_hom: f64::INFINITY,
    };
    if c_threshold(problem) {
        return Ok(trivial(StepRegime::ConstantMean));
    }
    if pc_threshold(problem) {
        return Ok(trivial(StepRegime::PiecewiseConstantROF));
    }
    if problem.p != 2.0 {
        return Err(invalid(format!(
            "no closed form for the 1-homogeneous step with p = {} outside the w = 0 regimes",
            problem.p
        )));
    }
    let beta_two = inverse_beta_map(problem, problem.beta)
        .ok_or_else(|| invalid("beta lies outside the range of the homogeneity map"))?;
    Ok(two_hom_solution(&problem.with_two_hom_beta(beta_two)))
}

/// Regime of the exact solution; see [`step_solution`] for which problems
/// are covered.
pub fn classify_step(problem: &StepProblem) -> Result<StepRegime> {
    problem.validate()?;
    if problem.model == StepModel::TwoHom {
        return Ok(two_hom_regime(problem, 1.0 / problem.beta.sqrt()));
    }
    Ok(step_solution(problem)?.regime)
}

/// Residuals of the first-order optimality conditions for a 1D candidate
/// `(u, w)`, expressed through `phi_i = t sum_{j<=i} (u_j - f_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `|phi_n|`.
    pub boundary: f64,
    /// `max(max|phi| - alpha, 0)`.
    pub sup_excess: f64,
    /// `max |phi_i - alpha sign((u' - w)_i)|` over the support of `u' - w`.
    pub support: f64,
    /// With `w = 0`: `max(||phi||_q - beta, 0)`; otherwise the largest
    /// mismatch between `phi` and the derivative of the `w` penalty.
    pub w_condition: f64,
    pub w_is_zero: bool,
    /// Threshold on `|u' - w|` used to define the support.
    pub eps_supp: f64,
    pub support_size: usize,
}

impl CertificateReport {
    pub fn max_residual(&self) -> f64 {
        self.boundary.max(self.sup_excess).max(self.support).max(self.w_condition)
    }
}

/// Builds `phi` and evaluates the four optimality conditions.
///
/// `eps_supp` defaults to `1e-6 * max(|u' - w|, |u'|, |f'|)`: relative to
/// `u' - w` alone, round-off in a numerically zero `u' - w` (smooth or
/// constant solutions) would be counted as support.
/// Norms follow the quadrature convention.
pub fn verify_optimality_1d(
    u: &Grid1D,
    w: &Grid1D,
    f: &Grid1D,
    params: &SolveParams,
    eps_supp: Option<f64>,
) -> Result<CertificateReport> {
    let n = f.len();
    if u.len() != n || w.len() != n {
        return Err(TvlpError::ShapeMismatch { expected: (n, 1), found: (u.len().max(w.len()), 1) });
    }
    let t = f.spacing();
    let uv = u.values();
    let wv = w.values();

    let mut phi = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (a, b) in uv.iter().zip(f.values().iter()) {
        acc += t * (a - b);
        phi.push(acc);
    }
    let du: Vec<f64> = (0..n).map(|i| if i + 1 < n { (uv[i + 1] - uv[i]) / t } else { 0.0 }).collect();
    let dw: Vec<f64> = (0..n).map(|i| du[i] - wv[i]).collect();

    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let fv = f.values();
    let df: Vec<f64> = (0..n - 1).map(|i| (fv[i + 1] - fv[i]) / t).collect();
    let eps_supp = eps_supp.unwrap_or_else(|| 1e-6 * max_abs(&dw).max(max_abs(&du)).max(max_abs(&df)));

    let alpha = params.alpha;
    let beta = params.beta;
    let p = params.p;
    let boundary = phi[n - 1].abs();
    let sup_excess = (max_abs(&phi) - alpha).max(0.0);

    let mut support = 0.0f64;
    let mut support_size = 0;
    for i in 0..n - 1 {
        if dw[i].abs() > eps_supp {
            support = support.max((phi[i] - alpha * dw[i].signum()).abs());
            support_size += 1;
        }
    }

    let w_max = wv.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let w_is_zero = w_max == 0.0;
    let quad_norm = |v: &mut dyn Iterator<Item = f64>, e: f64| -> f64 {
        let vals: Vec<f64> = v.collect();
        let s = max_abs(&vals);
        if s == 0.0 {
            return 0.0;
        }
        s * (vals.iter().map(|x| (x.abs() / s).powf(e)).sum::<f64>() * t).powf(1.0 / e)
    };
    let w_condition = if w_is_zero {
        match params.mode {
            Homogeneity::OneHomogeneous => {
                let q = p / (p - 1.0);
                (quad_norm(&mut phi.iter().copied(), q) - beta).max(0.0)
            }
            // The derivative of (beta/p)|w|^p vanishes at zero.
            Homogeneity::PHomogeneous => max_abs(&phi),
        }
    } else {
        let scale = match params.mode {
            Homogeneity::OneHomogeneous => beta / quad_norm(&mut wv.iter().copied(), p).powf(p - 1.0),
            Homogeneity::PHomogeneous => beta,
        };
        (0..n - 1)
            .map(|i| (phi[i] - scale * wv[i].abs().powf(p - 2.0) * wv[i]).abs())
            .fold(0.0, f64::max)
    };
    Ok(CertificateReport { boundary, sup_excess, support, w_condition, w_is_zero, eps_supp, support_size })
}
