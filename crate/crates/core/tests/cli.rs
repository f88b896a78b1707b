//! End-to-end runs of the `tvlp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tvlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvlp")).args(args).output().expect("spawn tvlp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn analytic_solutions_pass_verification() {
    let dir = TempDir::new().unwrap();
    let fixtures: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/step_regimes.json")).unwrap()).unwrap();
    assert_eq!(fixtures.len(), 4);
    for case in &fixtures {
        let field = |k: &str| match &case[k] {
            Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        let (model, alpha, beta, mode, regime) = (field("model"), field("alpha"), field("beta"), field("mode"), field("regime"));
        let (model, alpha, beta, mode, regime) = (model.as_str(), alpha.as_str(), beta.as_str(), mode.as_str(), regime.as_str());
        let csv = path(&dir, &format!("{model}-{alpha}-{beta}.csv"));
        let out = tvlp(&["analytic", "--alpha", alpha, "--beta", beta, "--model", model, "--n", "2000", "--out-csv", s(&csv)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), regime);
        assert_eq!(json_file(&csv.with_extension("json"))["results"]["regime"], regime);

        let out = tvlp(&["verify", "--u", s(&csv), "--w", s(&csv), "--f", s(&csv), "--p", "2", "--alpha", alpha, "--beta", beta, "--mode", mode]);
        let report = stdout_json(&out);
        assert_eq!(code(&out), 0, "{model} {alpha} {beta}: {report}");
        assert_eq!(report["results"]["pass"], true);
    }
}

#[test]
fn verify_rejects_a_wrong_candidate() {
    let dir = TempDir::new().unwrap();
    let exact = path(&dir, "exact.csv");
    assert_eq!(code(&tvlp(&["analytic", "--alpha", "20", "--beta", "450", "--out-csv", s(&exact)])), 0);
    // The data itself is not a minimiser.
    let data = path(&dir, "data.csv");
    assert_eq!(code(&tvlp(&["gen", "--kind", "step1d", "--n", "2000", "--out", s(&data)])), 0);
    let out = tvlp(&["verify", "--u", s(&data), "--w", s(&exact), "--f", s(&data), "--p", "2", "--alpha", "20", "--beta", "450", "--mode", "phom"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["results"]["pass"], false);
}

#[test]
fn denoised_step_passes_verification() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "step.csv");
    let u = path(&dir, "u.csv");
    assert_eq!(code(&tvlp(&["gen", "--kind", "step1d", "--n", "1000", "--out", s(&data)])), 0);
    let out = tvlp(&[
        "denoise", "--in", s(&data), "--out", s(&u), "--alpha", "20", "--beta", "450", "--mode", "phom", "--tol", "1e-9",
        "--max-iter", "20000", "--quadrature",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json_file(&u.with_extension("json"));
    assert_eq!(report["command"], "denoise");
    assert_eq!(report["results"]["solve"]["terminated_by"], "Tolerance");
    let out = tvlp(&["verify", "--u", s(&u), "--w", s(&u), "--f", s(&u), "--p", "2", "--alpha", "20", "--beta", "450", "--mode", "phom"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn image_pipeline_is_reproducible_without_timings() {
    let dir = TempDir::new().unwrap();
    let clean = path(&dir, "clean.pgm");
    let noisy = path(&dir, "noisy.pgm");
    assert_eq!(code(&tvlp(&["gen", "--kind", "ramp-square2d", "--size", "48", "--out", s(&clean)])), 0);
    assert_eq!(code(&tvlp(&["noise", "--in", s(&clean), "--out", s(&noisy), "--variance", "0.01", "--seed", "42"])), 0);

    let u = path(&dir, "u.pgm");
    let report = path(&dir, "u.report.json");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = tvlp(&[
            "denoise", "--in", s(&noisy), "--out", s(&u), "--alpha", "0.3", "--beta", "8", "--report", s(&report), "--omit-timings",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(!u.with_extension("json").exists(), "--report should replace the default path");
        outputs.push((std::fs::read(&u).unwrap(), std::fs::read_to_string(&report).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);
    let report: Value = serde_json::from_str(&outputs[0].1).unwrap();
    assert_eq!(report["wall_time"], 0.0);
    assert!(report["results"]["solve"].get("wall_time").is_none());

    let out = tvlp(&["metrics", "--in", s(&u), "--ref", s(&clean)]);
    assert_eq!(code(&out), 0);
    let m = stdout_json(&out);
    let noisy_m = stdout_json(&tvlp(&["metrics", "--in", s(&noisy), "--ref", s(&clean)]));
    assert!(m["results"]["psnr_db"].as_f64().unwrap() > noisy_m["results"]["psnr_db"].as_f64().unwrap() + 3.0);
    assert!(m["results"]["ssim"].as_f64().unwrap() > noisy_m["results"]["ssim"].as_f64().unwrap());
}

#[test]
fn noise_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let clean = path(&dir, "clean.pgm");
    assert_eq!(code(&tvlp(&["gen", "--kind", "radial-spike2d", "--size", "32", "--out", s(&clean)])), 0);
    let mut files = Vec::new();
    for (name, seed) in [("a.pgm", "5"), ("b.pgm", "5"), ("c.pgm", "6")] {
        let out = path(&dir, name);
        assert_eq!(code(&tvlp(&["noise", "--in", s(&clean), "--out", s(&out), "--seed", seed])), 0);
        files.push(std::fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn rof_bregman_and_decompose_write_outputs() {
    let dir = TempDir::new().unwrap();
    let clean = path(&dir, "clean.pgm");
    let noisy = path(&dir, "noisy.pgm");
    assert_eq!(code(&tvlp(&["gen", "--kind", "radial-spike2d", "--size", "32", "--out", s(&clean)])), 0);
    assert_eq!(code(&tvlp(&["noise", "--in", s(&clean), "--out", s(&noisy)])), 0);

    let rof = path(&dir, "rof.pgm");
    assert_eq!(code(&tvlp(&["rof", "--in", s(&noisy), "--out", s(&rof), "--alpha", "0.2"])), 0);
    assert_eq!(json_file(&rof.with_extension("json"))["command"], "rof");

    let breg = path(&dir, "breg.pgm");
    let out = tvlp(&["bregman", "--in", s(&noisy), "--out", s(&breg), "--iters", "3", "--ref", s(&clean), "--alpha", "1", "--beta", "50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json_file(&breg.with_extension("json"));
    assert_eq!(report["results"]["trace"]["metrics"].as_array().unwrap().len(), 3);
    assert!((1..=3).contains(&report["results"]["written_iterate"].as_u64().unwrap()));

    let (u, v) = (path(&dir, "u.pgm"), path(&dir, "v.pgm"));
    let out = tvlp(&["decompose", "--in", s(&clean), "--out-u", s(&u), "--out-v", s(&v), "--alpha", "0.05", "--beta", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(u.exists() && v.exists() && u.with_extension("json").exists());
}

#[test]
fn csv_round_trip_through_noise() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    assert_eq!(code(&tvlp(&["gen", "--kind", "piecewise-mix1d", "--n", "300", "--out", s(&a)])), 0);
    assert_eq!(code(&tvlp(&["noise", "--in", s(&a), "--out", s(&b), "--variance", "0"])), 0);
    let read = |p: &Path| tvlp::io::read_profile(p).unwrap();
    let (pa, pb) = (read(&a), read(&b));
    assert_eq!(pa.x, pb.x);
    assert_eq!(pa.u, pb.u);
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.pgm");
    let out = tvlp(&["denoise", "--in", s(&missing), "--out", s(&path(&dir, "o.pgm"))]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());

    let bad = path(&dir, "bad.pgm");
    std::fs::write(&bad, b"P2\n2 2\n255\n0 1\n2\n").unwrap();
    let out = tvlp(&["metrics", "--in", s(&bad), "--ref", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let nan = path(&dir, "nan.csv");
    std::fs::write(&nan, "x,u\n-0.5,1.0\n0.5,NaN\n").unwrap();
    assert_eq!(code(&tvlp(&["denoise", "--in", s(&nan), "--out", s(&path(&dir, "o.csv"))])), 2);

    assert_eq!(code(&tvlp(&["denoise", "--in", s(&missing), "--out", "o.pgm", "--alpha", "-1"])), 2);
    assert_eq!(code(&tvlp(&["gen", "--kind", "step1d", "--out", s(&path(&dir, "step.pgm"))])), 2);
    assert_eq!(code(&tvlp(&["no-such-command"])), 2);
}

#[test]
fn overflowing_solve_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let huge = path(&dir, "huge.csv");
    let mut text = String::from("x,u\n");
    for i in 0..64 {
        let x = -1.0 + (i as f64 + 0.5) / 32.0;
        text.push_str(&format!("{x:e},{:e}\n", if i % 2 == 0 { 1e300 } else { -1e300 }));
    }
    std::fs::write(&huge, text).unwrap();
    let out = tvlp(&["denoise", "--in", s(&huge), "--out", s(&path(&dir, "o.csv")), "--alpha", "1", "--beta", "1"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
