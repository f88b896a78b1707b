//! Forward-difference gradient, its adjoint and the discrete TV.

use std::error::Error;

use ndarray::Array2;
use tvlp::grid::{Image2D, NormConvention, VectorField2D};
use tvlp::ops::{divergence, gradient, image_dot, tv_value};

fn main() -> Result<(), Box<dyn Error>> {
    let u = Image2D::from_fn(20, 30, 1.0, |i, j| (i * j % 7) as f64)?;
    let p = VectorField2D::new(
        Array2::from_shape_fn((20, 30), |(i, j)| (i as f64 - j as f64).sin()),
        Array2::from_shape_fn((20, 30), |(i, j)| (i as f64 * 0.5).cos() * j as f64),
        1.0,
    )?;
    let lhs = gradient(&u).dot(&p);
    let rhs = -image_dot(&u, &divergence(&p));
    println!("<grad u, p> = {lhs:.6}, -<u, div p> = {rhs:.6}");

    let checker = Image2D::from_fn(2, 2, 1.0, |i, j| ((i + j) % 2) as f64)?;
    println!("TV of a 2x2 checkerboard: {:.6} (2 + sqrt 2 = {:.6})", tv_value(&checker, NormConvention::Discrete), 2.0 + 2f64.sqrt());
    Ok(())
}
