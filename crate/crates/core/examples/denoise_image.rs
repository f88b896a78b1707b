//! TVL^2 against ROF on a noisy piecewise-affine image.

use std::error::Error;

use tvlp::grid::SolveParams;
use tvlp::metrics::{psnr, ssim};
use tvlp::noise::{add_gaussian_noise, NoiseSpec};
use tvlp::phantom::{generate, PhantomSpec};
use tvlp::solver::{denoise, denoise_rof};

fn main() -> Result<(), Box<dyn Error>> {
    let clean = generate(&PhantomSpec::RampSquare2D { size: 128 })?;
    let noisy = add_gaussian_noise(&clean, NoiseSpec { variance: 0.01, seed: 42 })?;
    let show = |name: &str, u: &tvlp::grid::Image2D| -> Result<(), Box<dyn Error>> {
        println!("{name:>6}: PSNR {:6.2} dB  SSIM {:.4}", psnr(u, &clean, 1.0)?.value(), ssim(u, &clean, 1.0)?);
        Ok(())
    };
    show("noisy", &noisy)?;

    let (rof, _) = denoise_rof(&noisy, 0.3, 3.0, 1e-5, 2000)?;
    show("ROF", &rof)?;

    let params = SolveParams::new(0.3, 22.0, 2.0)?.with_tol(1e-5).with_max_outer(2000);
    let (u, w, report) = denoise(&noisy, &params)?;
    show("TVL^2", &u)?;
    let wmax = w.magnitude().iter().fold(0.0f64, |a, &b| a.max(b));
    println!("TVL^2 took {} iterations; max |w| = {wmax:.4}", report.iterations());
    Ok(())
}
