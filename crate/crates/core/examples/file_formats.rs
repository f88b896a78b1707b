//! PGM, CSV and JSON round trips.

use std::error::Error;

use tvlp::io::{read_pgm, read_profile, write_pgm, write_profile, IntensityRange, PgmEncoding, Profile};
use tvlp::phantom::{generate, PhantomSpec};

fn main() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join("tvlp-file-formats");
    std::fs::create_dir_all(&dir)?;

    let img = generate(&PhantomSpec::RampSquare2D { size: 64 })?;
    for enc in [PgmEncoding::Ascii, PgmEncoding::Binary] {
        let path = dir.join(format!("ramp-{enc:?}.pgm"));
        write_pgm(&path, &img, IntensityRange::default(), enc)?;
        let back = read_pgm(&path, IntensityRange::default())?;
        println!("{enc:?} PGM: max error {:.4} (8-bit quantisation)", back.max_abs_diff(&img));
    }

    let step = PhantomSpec::step(100.0, 1.0, 200).generate_1d()?;
    let path = dir.join("step.csv");
    write_profile(&path, &Profile::from_grid(&step))?;
    let back = read_profile(&path)?.u_grid()?;
    println!("CSV: exact round trip {}", back == step);

    match read_pgm(dir.join("missing.pgm"), IntensityRange::default()) {
        Err(e) => println!("missing file: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
