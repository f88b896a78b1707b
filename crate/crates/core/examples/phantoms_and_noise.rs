//! Generates every built-in phantom and a noisy copy of each 2D one.

use std::error::Error;

use tvlp::metrics::{psnr, ssim};
use tvlp::noise::{add_gaussian_noise, NoiseSpec};
use tvlp::phantom::{generate, PhantomSpec};

fn main() -> Result<(), Box<dyn Error>> {
    let specs = [
        PhantomSpec::step(100.0, 1.0, 2000),
        PhantomSpec::AffineStep1D { h: 100.0, l: 1.0, n: 2000, slope: 0.1 },
        PhantomSpec::PiecewiseMix1D { h: 100.0, l: 1.0, n: 2000 },
        PhantomSpec::RampSquare2D { size: 128 },
        PhantomSpec::RadialSpike2D { size: 128 },
    ];
    for spec in &specs {
        let img = generate(spec)?;
        let (lo, hi) = img.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        println!("{spec:?}: shape {:?}, values in [{lo:.3}, {hi:.3}]", img.shape());
        if !spec.is_1d() {
            let noisy = add_gaussian_noise(&img, NoiseSpec { variance: 0.01, seed: 42 })?;
            println!(
                "  noisy (var 0.01, seed 42): PSNR {:.2} dB, SSIM {:.4}",
                psnr(&noisy, &img, 1.0)?.value(),
                ssim(&noisy, &img, 1.0)?
            );
        }
    }
    Ok(())
}
