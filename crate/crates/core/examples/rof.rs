//! ROF on a noisy step: the solution is piecewise constant and the jump
//! shrinks by `2 alpha / L`.

use std::error::Error;

use tvlp::grid::{Image2D, Sampled};
use tvlp::noise::{add_gaussian_noise, NoiseSpec};
use tvlp::phantom::{generate, PhantomSpec};
use tvlp::solver::denoise_rof;

fn main() -> Result<(), Box<dyn Error>> {
    let (h, l, alpha) = (100.0, 1.0, 15.0);
    let f = generate(&PhantomSpec::step(h, l, 1000))?;
    let t = f.spacing();
    for (label, input) in [("clean", f.clone()), ("noisy", add_gaussian_noise(&f, NoiseSpec { variance: 4.0, seed: 3 })?)] {
        let (u, report) = denoise_rof(&input, alpha, 10.0 * alpha * t, 1e-9, 20000)?;
        println!("{label}: {} iterations, jump {:.3} (expected {:.3})", report.iterations(), jump(&u), h - 2.0 * alpha / l);
    }
    Ok(())
}

fn jump(u: &Image2D) -> f64 {
    let v = u.values();
    let n = v.nrows();
    v[[n / 2, 0]] - v[[n / 2 - 1, 0]]
}
