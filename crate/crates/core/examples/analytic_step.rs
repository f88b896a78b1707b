//! Regimes of the exact step solution as `beta` grows.

use std::error::Error;

use tvlp::analytic::{beta_map, classify_step, step_exact_2hom, step_solution, w_norm_2hom, StepModel, StepProblem};

fn main() -> Result<(), Box<dyn Error>> {
    let (h, l, alpha) = (100.0, 1.0, 20.0);
    println!("1-homogeneous, p = 2:");
    for beta in [5.0, 12.0, 14.0, 16.0, 60.0] {
        let sol = step_solution(&StepProblem::new(h, l, alpha, beta, 2.0, StepModel::OneHom)?)?;
        let (left, right) = sol.jump();
        println!("  beta {beta:>6}: {:?}, u(0-) {left:.4}, u(0+) {right:.4}", sol.regime);
    }

    println!("2-homogeneous:");
    for beta in [50.0, 450.0, 5000.0] {
        let problem = StepProblem::new(h, l, alpha, beta, 2.0, StepModel::TwoHom)?;
        let sol = step_exact_2hom(&problem)?;
        let norm = w_norm_2hom(&problem)?;
        println!(
            "  beta {beta:>6}: {:?}, ||w||_2 {norm:.4}, equivalent 1-hom beta {:.4}",
            classify_step(&problem)?,
            beta_map(beta, norm, 2.0)?
        );
        println!("    u(-L) {:.4}, u(0-) {:.4}", sol.u(-l), sol.jump().0);
    }
    Ok(())
}
