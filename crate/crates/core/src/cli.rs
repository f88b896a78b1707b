//! Command-line front end. Every command writes a JSON report next to its
//! primary output (`--report` overrides the path).
//!
//! Exit codes: 0 success, 1 verification failed, 2 invalid input,
//! 3 non-finite values.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytic::{classify_step, step_solution, verify_optimality_1d, StepModel, StepProblem};
use crate::bregman::bregmanized_denoise;
use crate::decompose::decompose;
use crate::error::{invalid, Result, TvlpError};
use crate::grid::{Grid1D, Homogeneity, Image2D, NormConvention, Sampled, SolveParams};
use crate::io::{is_csv, read_profile, save_image, write_json, write_profile, IntensityRange, Profile, RunReport};
use crate::metrics::{psnr, ssim};
use crate::noise::{add_gaussian_noise, NoiseSpec};
use crate::phantom::{generate, PhantomSpec};
use crate::solver::{denoise, denoise_rof};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "tvlp", version, about = "TV-Lp denoising, decomposition and exact 1D solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Where to write the JSON report.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Leave timings out of the report so reruns are byte-identical.
    #[arg(long, global = true)]
    pub omit_timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic phantom.
    Gen(GenArgs),
    /// Add seeded Gaussian noise.
    Noise(NoiseArgs),
    /// TVL^p denoising.
    Denoise(DenoiseArgs),
    /// ROF denoising.
    Rof(RofArgs),
    /// Bregman iteration over TVL^p denoising.
    Bregman(BregmanArgs),
    /// Split an image into piecewise constant and smooth parts.
    Decompose(DecomposeArgs),
    /// Exact solution of the 1D step problem.
    Analytic(AnalyticArgs),
    /// Optimality certificate of a 1D solution.
    Verify(VerifyArgs),
    /// PSNR and SSIM against a reference.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Step1d,
    AffineStep1d,
    PiecewiseMix1d,
    RampSquare2d,
    RadialSpike2d,
}

/// Grey-level mapping for PGM files.
#[derive(Args, Debug, Clone, Serialize)]
pub struct RangeArgs {
    /// Value mapped to grey level 0.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lo: f64,
    /// Value mapped to the largest grey level.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hi: f64,
}

impl RangeArgs {
    fn range(&self) -> IntensityRange {
        IntensityRange { lo: self.lo, hi: self.hi }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    pub h: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub slope: f64,
    #[arg(long, default_value_t = 200)]
    pub size: usize,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct NoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub variance: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Mode {
    #[value(name = "1hom")]
    OneHom,
    #[value(name = "phom")]
    PHom,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 13.5)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = Mode::OneHom)]
    pub mode: Mode,
    /// Split Bregman penalty (default: 10 alpha t for p < 4, 1000 alpha t otherwise).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Weight sums by the cell volume (default for 1D input).
    #[arg(long)]
    pub quadrature: bool,
}

impl SolverArgs {
    fn params(&self) -> Result<SolveParams> {
        let mode = match self.mode {
            Mode::OneHom => Homogeneity::OneHomogeneous,
            Mode::PHom => Homogeneity::PHomogeneous,
        };
        let mut p = SolveParams::new(self.alpha, self.beta, self.p)?
            .with_mode(mode)
            .with_tol(self.tol)
            .with_max_outer(self.max_iter);
        if let Some(l) = self.lambda {
            p = p.with_lambda(l);
        }
        if self.quadrature {
            p = p.with_convention(NormConvention::Quadrature);
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct DenoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RofArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BregmanArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub iters: usize,
    /// Clean image; the best-SSIM iterate is written instead of the last.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_u: PathBuf,
    #[arg(long)]
    pub out_v: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Model {
    #[value(name = "1hom")]
    OneHom,
    #[value(name = "2hom")]
    TwoHom,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyticArgs {
    #[arg(long, default_value_t = 100.0)]
    pub h: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = Model::TwoHom)]
    pub model: Model,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Profile with columns x,u,w,f.
    #[arg(long)]
    pub out_csv: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// CSV with the candidate in column `u`.
    #[arg(long)]
    pub u: PathBuf,
    /// CSV with column `w` (or `u` when there is no `w` column).
    #[arg(long)]
    pub w: PathBuf,
    /// CSV with column `f` (or `u` when there is no `f` column).
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = Mode::OneHom)]
    pub mode: Mode,
    /// Pass threshold as a multiple of alpha.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    #[command(flatten)]
    pub range: RangeArgs,
}

/// An input image with the origin of its 1D coordinates, if any.
struct Loaded {
    image: Image2D,
    origin: f64,
    /// Positions read from a CSV, reused verbatim for 1D outputs.
    x: Option<Vec<f64>>,
}

impl Loaded {
    fn profile(&self, result: &Image2D) -> Result<Profile> {
        let mut p = Profile::from_grid(&Grid1D::from_image(result, self.origin)?);
        if let Some(x) = self.x.as_ref().filter(|x| x.len() == p.x.len()) {
            p.x = x.clone();
        }
        Ok(p)
    }

    /// Writes a result computed from this input.
    fn save(&self, path: &Path, result: &Image2D, range: &RangeArgs) -> Result<()> {
        if is_csv(path) {
            write_profile(path, &self.profile(result)?)
        } else {
            save(path, result, self.origin, range)
        }
    }
}

/// Non-finite samples in a file are bad input (exit 2), not a solver failure.
fn load(path: &Path, range: &RangeArgs) -> Result<Loaded> {
    load_raw(path, range).map_err(|e| match e {
        TvlpError::NonFinite { .. } => invalid(format!("{}: input contains non-finite values", path.display())),
        e => e,
    })
}

fn load_raw(path: &Path, range: &RangeArgs) -> Result<Loaded> {
    if is_csv(path) {
        let p = read_profile(path)?;
        let g = p.u_grid()?;
        Ok(Loaded { origin: g.origin(), image: g.to_image(), x: Some(p.x) })
    } else {
        Ok(Loaded { image: crate::io::read_pgm(path, range.range())?, origin: 0.0, x: None })
    }
}

fn save(path: &Path, image: &Image2D, origin: f64, range: &RangeArgs) -> Result<()> {
    save_image(path, image, origin, range.range())
}

fn default_report_path(primary: &Path) -> PathBuf {
    primary.with_extension("json")
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                TvlpError::NonFinite { .. } => EXIT_NON_FINITE,
                _ => EXIT_INVALID,
            }
        }
    }
}

struct Outcome {
    /// Where the report goes when `--report` is absent; `None` prints it.
    report_path: Option<PathBuf>,
    parameters: Value,
    results: Value,
    code: i32,
}

fn execute(cli: &Cli) -> Result<i32> {
    let start = Instant::now();
    let (name, outcome) = match &cli.command {
        Command::Gen(a) => ("gen", cmd_gen(a)?),
        Command::Noise(a) => ("noise", cmd_noise(a)?),
        Command::Denoise(a) => ("denoise", cmd_denoise(a)?),
        Command::Rof(a) => ("rof", cmd_rof(a)?),
        Command::Bregman(a) => ("bregman", cmd_bregman(a)?),
        Command::Decompose(a) => ("decompose", cmd_decompose(a)?),
        Command::Analytic(a) => ("analytic", cmd_analytic(a)?),
        Command::Verify(a) => ("verify", cmd_verify(a)?),
        Command::Metrics(a) => ("metrics", cmd_metrics(a)?),
    };
    let mut report = RunReport {
        command: name.to_string(),
        parameters: outcome.parameters,
        results: outcome.results,
        wall_time: if cli.omit_timings { 0.0 } else { start.elapsed().as_secs_f64() },
    };
    if cli.omit_timings {
        strip_timings(&mut report.results);
    }
    match cli.report.clone().or(outcome.report_path) {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(outcome.code)
}

fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_time");
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn phantom_spec(a: &GenArgs) -> PhantomSpec {
    match a.kind {
        Kind::Step1d => PhantomSpec::Step1D { h: a.h, l: a.l, n: a.n },
        Kind::AffineStep1d => PhantomSpec::AffineStep1D { h: a.h, l: a.l, n: a.n, slope: a.slope },
        Kind::PiecewiseMix1d => PhantomSpec::PiecewiseMix1D { h: a.h, l: a.l, n: a.n },
        Kind::RampSquare2d => PhantomSpec::RampSquare2D { size: a.size },
        Kind::RadialSpike2d => PhantomSpec::RadialSpike2D { size: a.size },
    }
}

fn cmd_gen(a: &GenArgs) -> Result<Outcome> {
    let spec = phantom_spec(a);
    if spec.is_1d() != is_csv(&a.out) {
        return Err(invalid("1D phantoms are written as .csv, 2D phantoms as .pgm"));
    }
    let image = generate(&spec)?;
    let origin = if spec.is_1d() { -a.l } else { 0.0 };
    save(&a.out, &image, origin, &a.range)?;
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out)),
        parameters: to_value(a)?,
        results: json!({ "spec": spec, "shape": image.shape(), "min": image.values().fold(f64::INFINITY, |m, &v| m.min(v)), "max": image.values().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) }),
        code: EXIT_OK,
    })
}

fn cmd_noise(a: &NoiseArgs) -> Result<Outcome> {
    let input = load(&a.input, &a.range)?;
    let noisy = add_gaussian_noise(&input.image, NoiseSpec { variance: a.variance, seed: a.seed })?;
    input.save(&a.out, &noisy, &a.range)?;
    let results = if is_csv(&a.out) {
        json!({})
    } else {
        // What the written file actually holds after quantisation.
        json!({ "psnr_vs_input": psnr(&noisy, &input.image, a.range.hi - a.range.lo)?.value() })
    };
    Ok(Outcome { report_path: Some(default_report_path(&a.out)), parameters: to_value(a)?, results, code: EXIT_OK })
}

fn cmd_denoise(a: &DenoiseArgs) -> Result<Outcome> {
    let input = load(&a.input, &a.range)?;
    let params = a.solver.params()?;
    let (u, w, report) = denoise(&input.image, &params)?;
    if is_csv(&a.out) {
        let mut profile = input.profile(&u)?;
        profile.w = Some(w.comp1().iter().copied().collect());
        profile.f = Some(input.image.values().iter().copied().collect());
        write_profile(&a.out, &profile)?;
    } else {
        input.save(&a.out, &u, &a.range)?;
    }
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out)),
        parameters: to_value(a)?,
        results: json!({ "solve": report, "convention": params.resolve_convention(&input.image) }),
        code: EXIT_OK,
    })
}

fn cmd_rof(a: &RofArgs) -> Result<Outcome> {
    let input = load(&a.input, &a.range)?;
    let t = input.image.spacing();
    let lambda = a.lambda.unwrap_or(10.0 * a.alpha * t);
    let (u, report) = denoise_rof(&input.image, a.alpha, lambda, a.tol, a.max_iter)?;
    input.save(&a.out, &u, &a.range)?;
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out)),
        parameters: to_value(a)?,
        results: json!({ "solve": report }),
        code: EXIT_OK,
    })
}

fn cmd_bregman(a: &BregmanArgs) -> Result<Outcome> {
    let input = load(&a.input, &a.range)?;
    let reference = a.reference.as_ref().map(|p| load(p, &a.range)).transpose()?;
    let params = a.solver.params()?;
    let (iterates, trace) = bregmanized_denoise(&input.image, &params, a.iters, reference.as_ref().map(|r| &r.image))?;
    let chosen = trace.best_by_ssim().unwrap_or(iterates.len() - 1);
    input.save(&a.out, &iterates[chosen], &a.range)?;
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out)),
        parameters: to_value(a)?,
        results: json!({ "written_iterate": chosen + 1, "trace": trace }),
        code: EXIT_OK,
    })
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<Outcome> {
    let input = load(&a.input, &a.range)?;
    let params = a.solver.params()?;
    let d = decompose(&input.image, &params)?;
    input.save(&a.out_u, &d.u_part, &a.range)?;
    // v has zero mean; shift it to mid-range so a PGM can hold it.
    let v_out = if is_csv(&a.out_v) {
        d.v_part.clone()
    } else {
        let mid = 0.5 * (a.range.lo + a.range.hi);
        d.v_part.map(|x| x + mid)?
    };
    input.save(&a.out_v, &v_out, &a.range)?;
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out_u)),
        parameters: to_value(a)?,
        results: json!({ "solve": d.report }),
        code: EXIT_OK,
    })
}

fn cmd_analytic(a: &AnalyticArgs) -> Result<Outcome> {
    let model = match a.model {
        Model::OneHom => StepModel::OneHom,
        Model::TwoHom => StepModel::TwoHom,
    };
    let problem = StepProblem::new(a.h, a.l, a.alpha, a.beta, a.p, model)?;
    let regime = classify_step(&problem)?;
    let exact = step_solution(&problem)?;
    let f = problem.sample(a.n)?;
    let u = exact.sample_u(&f)?;
    let w = exact.sample_w(&f)?;
    let mut profile = Profile::from_grid(&u);
    profile.w = Some(w.values().to_vec());
    profile.f = Some(f.values().to_vec());
    write_profile(&a.out_csv, &profile)?;
    println!("{regime:?}");
    Ok(Outcome {
        report_path: Some(default_report_path(&a.out_csv)),
        parameters: to_value(a)?,
        results: json!({ "regime": regime, "solution": exact, "w_norm": exact.w_norm() }),
        code: EXIT_OK,
    })
}

fn column(path: &Path, pick: impl Fn(&Profile) -> Option<&Vec<f64>>) -> Result<Grid1D> {
    let p = read_profile(path)?;
    let col = pick(&p).unwrap_or(&p.u).clone();
    p.grid(&col).map_err(|e| match e {
        TvlpError::NonFinite { .. } => invalid(format!("{}: column contains non-finite values", path.display())),
        e => e,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let u = column(&a.u, |_| None)?;
    let w = column(&a.w, |p| p.w.as_ref())?;
    let f = column(&a.f, |p| p.f.as_ref())?;
    let mode = match a.mode {
        Mode::OneHom => Homogeneity::OneHomogeneous,
        Mode::PHom => Homogeneity::PHomogeneous,
    };
    let params = SolveParams::new(a.alpha, a.beta, a.p)?.with_mode(mode);
    let cert = verify_optimality_1d(&u, &w, &f, &params, None)?;
    let threshold = a.threshold * a.alpha;
    let pass = cert.max_residual() <= threshold;
    Ok(Outcome {
        report_path: None,
        parameters: to_value(a)?,
        results: json!({ "certificate": cert, "threshold": threshold, "pass": pass }),
        code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn cmd_metrics(a: &MetricsArgs) -> Result<Outcome> {
    let u = load(&a.input, &a.range)?.image;
    let r = load(&a.reference, &a.range)?.image;
    let p = psnr(&u, &r, a.peak)?;
    let s = ssim(&u, &r, a.peak).ok();
    Ok(Outcome {
        report_path: None,
        parameters: to_value(a)?,
        results: json!({ "psnr": p, "psnr_db": if p.value().is_finite() { json!(p.value()) } else { json!("inf") }, "ssim": s }),
        code: EXIT_OK,
    })
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}
