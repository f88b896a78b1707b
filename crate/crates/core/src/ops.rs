//! Forward-difference gradient with zero Neumann boundary, its negative
//! adjoint (divergence), and the isotropic field norms built on them.

use ndarray::{s, Array2, Zip};

use crate::grid::{Image2D, NormConvention, VectorField2D};

fn dimension_of(shape: (usize, usize)) -> i32 {
    if shape.1 == 1 {
        1
    } else {
        2
    }
}

pub(crate) fn gradient_raw(u: &Array2<f64>, t: f64) -> (Array2<f64>, Array2<f64>) {
    let (n, m) = u.dim();
    let mut g1 = Array2::zeros((n, m));
    let mut g2 = Array2::zeros((n, m));
    let inv_t = 1.0 / t;
    if n > 1 {
        Zip::from(g1.slice_mut(s![..n - 1, ..]))
            .and(u.slice(s![1.., ..]))
            .and(u.slice(s![..n - 1, ..]))
            .for_each(|g, &next, &cur| *g = (next - cur) * inv_t);
    }
    if m > 1 {
        Zip::from(g2.slice_mut(s![.., ..m - 1]))
            .and(u.slice(s![.., 1..]))
            .and(u.slice(s![.., ..m - 1]))
            .for_each(|g, &next, &cur| *g = (next - cur) * inv_t);
    }
    (g1, g2)
}

/// `div w` such that `<-div w, u> = <w, grad u>` for every `u`.
pub(crate) fn divergence_raw(w1: &Array2<f64>, w2: &Array2<f64>, t: f64) -> Array2<f64> {
    let (n, m) = w1.dim();
    let inv_t = 1.0 / t;
    let mut out = Array2::zeros((n, m));
    // Row direction: the last row of w1 never enters the gradient.
    if n > 1 {
        Zip::from(out.slice_mut(s![..n - 1, ..]))
            .and(w1.slice(s![..n - 1, ..]))
            .for_each(|o, &w| *o += w * inv_t);
        Zip::from(out.slice_mut(s![1.., ..]))
            .and(w1.slice(s![..n - 1, ..]))
            .for_each(|o, &w| *o -= w * inv_t);
    }
    if m > 1 {
        Zip::from(out.slice_mut(s![.., ..m - 1]))
            .and(w2.slice(s![.., ..m - 1]))
            .for_each(|o, &w| *o += w * inv_t);
        Zip::from(out.slice_mut(s![.., 1..]))
            .and(w2.slice(s![.., ..m - 1]))
            .for_each(|o, &w| *o -= w * inv_t);
    }
    out
}

/// Forward differences divided by the spacing; the last row of the first
/// component and the last column of the second are zero.
pub fn gradient(u: &Image2D) -> VectorField2D {
    let (g1, g2) = gradient_raw(&u.values, u.spacing);
    VectorField2D::from_parts(g1, g2, u.spacing)
}

/// Discrete divergence, the exact negative adjoint of [`gradient`].
pub fn divergence(w: &VectorField2D) -> Image2D {
    Image2D::from_parts(divergence_raw(&w.comp1, &w.comp2, w.spacing), w.spacing)
}

/// Plain Euclidean inner product of two images.
pub fn image_dot(a: &Image2D, b: &Image2D) -> f64 {
    (&a.values * &b.values).sum()
}

pub(crate) fn raw_field_lp_norm(
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    p: f64,
    weight: f64,
) -> f64 {
    if p == 1.0 {
        let sum: f64 = w1.iter().zip(w2.iter()).map(|(a, b)| a.hypot(*b)).sum();
        return sum * weight;
    }
    let scale = w1
        .iter()
        .zip(w2.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max(a.hypot(*b)));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = w1
        .iter()
        .zip(w2.iter())
        .map(|(a, b)| (a.hypot(*b) / scale).powf(p))
        .sum();
    scale * (sum * weight).powf(1.0 / p)
}

/// `(sum_ij |w(i,j)|^p)^(1/p)` with the Euclidean magnitude per pixel.
pub fn field_lp_norm(w: &VectorField2D, p: f64, convention: NormConvention) -> f64 {
    debug_assert!(p >= 1.0 && p.is_finite());
    let weight = convention.weight(w.spacing, dimension_of(w.shape()));
    raw_field_lp_norm(&w.comp1, &w.comp2, p, weight)
}

/// Isotropic total variation `||grad u||_1`.
pub fn tv_value(u: &Image2D, convention: NormConvention) -> f64 {
    field_lp_norm(&gradient(u), 1.0, convention)
}
