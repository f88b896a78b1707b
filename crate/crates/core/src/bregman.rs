//! Bregman iteration on top of TVL^p denoising: each outer step denoises
//! `f + v_k` and adds the new residual `f - u_{k+1}` back into `v`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Image2D, SolveParams};
use crate::metrics::{psnr, ssim};
use crate::solver::{denoise, SolveReport};

/// Quality of one outer iterate against a reference image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateMetrics {
    /// `+inf` when the iterate equals the reference.
    pub psnr: f64,
    /// `None` for images smaller than the SSIM window.
    pub ssim: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BregmanTrace {
    /// Accumulated residual after the last outer step.
    #[serde(skip)]
    pub residual: Option<Image2D>,
    /// `||f - u_k||_2` per outer step.
    pub data_fit: Vec<f64>,
    /// Empty when no reference was given.
    pub metrics: Vec<IterateMetrics>,
    pub reports: Vec<SolveReport>,
}

impl BregmanTrace {
    /// Index of the iterate with the largest SSIM (PSNR when SSIM is unavailable).
    pub fn best_by_ssim(&self) -> Option<usize> {
        best_index(&self.metrics, |m| m.ssim.unwrap_or(m.psnr))
    }

    pub fn best_by_psnr(&self) -> Option<usize> {
        best_index(&self.metrics, |m| m.psnr)
    }
}

fn best_index(metrics: &[IterateMetrics], key: impl Fn(&IterateMetrics) -> f64) -> Option<usize> {
    metrics
        .iter()
        .enumerate()
        .max_by(|a, b| key(a.1).total_cmp(&key(b.1)))
        .map(|(i, _)| i)
}

/// Runs `outer_k` Bregman steps and returns every iterate.
///
/// With a reference image, PSNR (peak 1) and SSIM (range 1) are recorded per
/// iterate; see [`BregmanTrace::best_by_ssim`].
pub fn bregmanized_denoise(
    f: &Image2D,
    params: &SolveParams,
    outer_k: usize,
    reference: Option<&Image2D>,
) -> Result<(Vec<Image2D>, BregmanTrace)> {
    if outer_k == 0 {
        return Err(invalid("outer_k must be at least 1"));
    }
    if let Some(r) = reference {
        f.ensure_same_shape(r)?;
    }
    let (n, m) = f.shape();
    let mut v = Image2D::constant(n, m, f.spacing, 0.0)?;
    let mut iterates = Vec::with_capacity(outer_k);
    let mut trace = BregmanTrace { residual: None, data_fit: Vec::new(), metrics: Vec::new(), reports: Vec::new() };
    for _ in 0..outer_k {
        let data = f.with_values(&f.values + &v.values)?;
        let (u, _, report) = denoise(&data, params)?;
        let r = &f.values - &u.values;
        trace.data_fit.push(r.mapv(|d| d * d).sum().sqrt());
        v.values += &r;
        if let Some(reference) = reference {
            let p = psnr(&u, reference, 1.0)?.value();
            let s = ssim(&u, reference, 1.0).ok();
            trace.metrics.push(IterateMetrics { psnr: p, ssim: s });
        }
        trace.reports.push(report);
        iterates.push(u);
    }
    trace.residual = Some(v);
    Ok((iterates, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Homogeneity;

    fn blocks() -> Image2D {
        Image2D::from_fn(24, 24, 1.0, |i, j| {
            let inside = (6..18).contains(&i) && (6..18).contains(&j);
            (if inside { 0.8 } else { 0.2 }) + 0.05 * ((i * 5 + j * 3) % 7) as f64 / 7.0
        })
        .unwrap()
    }

    fn params() -> SolveParams {
        SolveParams::new(0.1, 2.0, 2.0).unwrap().with_mode(Homogeneity::PHomogeneous).with_tol(1e-8)
    }

    #[test]
    fn single_step_is_plain_denoise() {
        let f = blocks();
        let (us, trace) = bregmanized_denoise(&f, &params(), 1, None).unwrap();
        let (u, _, _) = denoise(&f, &params()).unwrap();
        assert_eq!(us.len(), 1);
        assert_eq!(us[0], u);
        assert!(trace.metrics.is_empty());
    }

    #[test]
    fn constant_input_is_fixed() {
        let f = Image2D::constant(12, 12, 1.0, 0.4).unwrap();
        let (us, _) = bregmanized_denoise(&f, &params(), 3, None).unwrap();
        for u in &us {
            assert!(u.max_abs_diff(&f) <= 1e-12);
        }
    }

    #[test]
    fn residual_is_sum_of_defects() {
        let f = blocks();
        let (us, trace) = bregmanized_denoise(&f, &params(), 4, Some(&f)).unwrap();
        let mut sum = ndarray::Array2::<f64>::zeros(f.shape());
        for u in &us {
            sum += &(&f.values - &u.values);
        }
        let v = trace.residual.as_ref().unwrap();
        let err = (&v.values - &sum).iter().fold(0.0f64, |a, d| a.max(d.abs()));
        assert!(err <= 1e-12, "{err}");
        // Data fit improves over the first few steps.
        assert!(trace.data_fit.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", trace.data_fit);
        assert_eq!(trace.metrics.len(), 4);
        assert!(trace.best_by_psnr().is_some());
    }

    #[test]
    fn rejects_zero_steps() {
        assert!(bregmanized_denoise(&blocks(), &params(), 0, None).is_err());
    }
}
