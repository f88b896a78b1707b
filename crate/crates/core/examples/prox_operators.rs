//! The proximal maps used inside the solver, checked against their
//! optimality conditions.

use std::error::Error;

use ndarray::Array2;
use tvlp::grid::VectorField2D;
use tvlp::prox::{lp_prox_converge, lp_prox_residual, phom_prox, shrink};

fn main() -> Result<(), Box<dyn Error>> {
    let eta = VectorField2D::new(
        Array2::from_shape_fn((16, 16), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0),
        Array2::from_shape_fn((16, 16), |(i, j)| ((i * 5 + j * 2) % 13) as f64 / 6.0 - 1.0),
        1.0,
    )?;

    let z = shrink(&eta, 0.5);
    let zeroed = z.magnitude().iter().filter(|&&m| m == 0.0).count();
    println!("shrink(0.5): {zeroed} of 256 vectors set to zero");

    for p in [1.5, 2.0, 3.0] {
        let prox = lp_prox_converge(&eta, 2.0, p, None, 1e-10, 5000)?;
        println!("L^{p} prox (kappa 2): {} sweeps, residual {:.2e}", prox.sweeps, lp_prox_residual(&prox.w, &eta, 2.0, p));
        let ph = phom_prox(&eta, 0.5, p)?;
        println!("  p-homogeneous prox (kappa 0.5): |w|_max {:.4}", ph.magnitude().iter().fold(0.0f64, |a, &b| a.max(b)));
    }
    Ok(())
}
