//! Solves `(I - lambda Lap) u = r` with Neumann boundary conditions via the DCT.

use std::error::Error;

use tvlp::dct::{apply_screened_laplacian, dct2, idct2, neumann_eigenvalues, solve_screened_poisson, SpectrumMethod};
use tvlp::grid::Image2D;

fn main() -> Result<(), Box<dyn Error>> {
    let rhs = Image2D::from_fn(48, 64, 0.5, |i, j| ((i as f64 * 0.3).sin() + (j as f64 * 0.17).cos()).powi(2))?;

    let round_trip = idct2(&dct2(&rhs));
    println!("DCT round trip error {:.2e}", round_trip.max_abs_diff(&rhs));

    let analytic = neumann_eigenvalues(48, 64, 2.0, 0.5, SpectrumMethod::Analytic)?;
    let probed = neumann_eigenvalues(48, 64, 2.0, 0.5, SpectrumMethod::ImpulseProbe)?;
    let diff = (analytic.eigenvalues() - probed.eigenvalues()).iter().fold(0.0f64, |a, d| a.max(d.abs()));
    println!("eigenvalues: analytic vs impulse probe {diff:.2e}");

    let u = solve_screened_poisson(&rhs, 2.0, 0.5)?;
    let residual = apply_screened_laplacian(&u, 2.0).max_abs_diff(&rhs);
    println!("solve residual {residual:.2e}");
    Ok(())
}
