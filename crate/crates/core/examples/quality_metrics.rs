//! PSNR and SSIM fall as the noise level rises.

use std::error::Error;

use tvlp::metrics::{psnr, ssim};
use tvlp::noise::{add_gaussian_noise, NoiseSpec};
use tvlp::phantom::{generate, PhantomSpec};

fn main() -> Result<(), Box<dyn Error>> {
    let clean = generate(&PhantomSpec::RadialSpike2D { size: 128 })?;
    println!("identical: {:?}", psnr(&clean, &clean, 1.0)?);
    for variance in [1e-4, 1e-3, 1e-2, 1e-1] {
        let noisy = add_gaussian_noise(&clean, NoiseSpec { variance, seed: 1 })?;
        println!("variance {variance:>6}: PSNR {:6.2} dB, SSIM {:.4}", psnr(&noisy, &clean, 1.0)?.value(), ssim(&noisy, &clean, 1.0)?);
    }
    Ok(())
}
