//! Checks the first-order conditions for the exact solution and for a
//! perturbed candidate.

use std::error::Error;

use tvlp::analytic::{step_solution, verify_optimality_1d, StepModel, StepProblem};

fn main() -> Result<(), Box<dyn Error>> {
    let problem = StepProblem::new(100.0, 1.0, 20.0, 60.0, 2.0, StepModel::OneHom)?;
    let exact = step_solution(&problem)?;
    let f = problem.sample(4000)?;
    let params = problem.solve_params()?;
    let u = exact.sample_u(&f)?;
    let w = exact.sample_w(&f)?;

    let cert = verify_optimality_1d(&u, &w, &f, &params, None)?;
    println!("exact ({:?}): {cert:#?}", exact.regime);

    let shifted = u.with_values(u.values() + 0.5)?;
    let bad = verify_optimality_1d(&shifted, &w, &f, &params, None)?;
    println!("u + 0.5: max residual {:.3e}", bad.max_residual());
    Ok(())
}
