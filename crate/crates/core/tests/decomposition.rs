use tvlp::decompose::decompose;
use tvlp::grid::{mean_value, SolveParams};
use tvlp::ops::gradient;
use tvlp::phantom::{generate, PhantomSpec};

fn max(a: ndarray::Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x))
}

#[test]
fn radial_image_splits_into_edges_and_smooth_part() {
    let f = generate(&PhantomSpec::RadialSpike2D { size: 64 }).unwrap();
    let params = SolveParams::new(0.05, 2.0, 2.0).unwrap().with_tol(1e-6).with_max_outer(20000);
    let d = decompose(&f, &params).unwrap();
    let gu = max(gradient(&d.u_part).magnitude());
    let gv = max(gradient(&d.v_part).magnitude());
    // The rim jump stays in u; v carries the dome without any sharp edge.
    assert!(gu >= 5.0 * gv, "max |grad u| {gu}, max |grad v| {gv}");
    assert!(d.v_part.range() > 0.2, "v range {}", d.v_part.range());
    assert!(mean_value(&d.v_part).abs() <= 1e-10);
    assert!((mean_value(&d.sum()) - mean_value(&f)).abs() <= 1e-10);
}

#[test]
fn rof_regime_leaves_v_empty() {
    let f = generate(&PhantomSpec::RadialSpike2D { size: 32 }).unwrap();
    let params = SolveParams::new(0.05, 50.0, 2.0).unwrap().with_tol(1e-6).with_max_outer(20000);
    let d = decompose(&f, &params).unwrap();
    assert!(d.v_part.max_abs() <= 1e-3, "v max {}", d.v_part.max_abs());
}
