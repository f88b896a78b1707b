//! Denoises a step with the 2-homogeneous TVL^2 model and compares against
//! the exact solution.

use std::error::Error;

use tvlp::analytic::{step_solution, verify_optimality_1d, StepModel, StepProblem};
use tvlp::grid::{Grid1D, NormConvention, Sampled};
use tvlp::solver::denoise;

fn main() -> Result<(), Box<dyn Error>> {
    let problem = StepProblem::new(100.0, 1.0, 20.0, 450.0, 2.0, StepModel::TwoHom)?;
    let exact = step_solution(&problem)?;
    println!("regime {:?}, jump {:?}", exact.regime, exact.jump());

    let f = problem.sample(2000)?;
    let params = problem.solve_params()?.with_convention(NormConvention::Quadrature).with_tol(1e-8);
    let (u, w, report) = denoise(&f.to_image(), &params)?;
    println!("{} iterations ({:?}), lambda {}", report.iterations(), report.terminated_by, report.lambda);

    let u = Grid1D::from_image(&u, f.origin())?;
    let w = Grid1D::new(w.comp1().column(0).to_owned(), f.spacing(), f.origin())?;
    let u_exact = exact.sample_u(&f)?;
    let err = (u.values() - u_exact.values()).iter().fold(0.0f64, |a, d| a.max(d.abs()));
    println!("max |u - u_exact| / h = {:.2e}", err / problem.h);

    let cert = verify_optimality_1d(&u, &w, &f, &params, None)?;
    println!("optimality residual {:.2e} ({} support points)", cert.max_residual(), cert.support_size);
    Ok(())
}
