use std::f64::consts::{PI, SQRT_2};

use mcflab::blowup::shrinker_residual;
use mcflab::budget::{closed_gb_identity, local_gb_estimate_with, LocalGbParams};
use mcflab::flow::{run_flow, FlowOptions};
use mcflab::geom::{shapes, vector};
use mcflab::monotonicity::{huisken_functional, HeatKernel};
use mcflab::zoo::{exact_flow, make_shrinker, shoot_abresch_langer, ExactDatum, ShrinkerSpec};
use mcflab::Geometry;

#[test]
fn circle_shrinker_flows_onto_its_own_rescaling() {
    let spec = ShrinkerSpec::Circle { vertices: 128, dim: 2 };
    let g = make_shrinker(&spec).unwrap();
    let tr = run_flow(&g, 0.75, &FlowOptions { t0: -1.0, snapshot_interval: 0.25, ..Default::default() }).unwrap();
    let datum = ExactDatum::Shrinker { spec };
    for s in tr.snapshots() {
        let exact = exact_flow(&datum, s.t).unwrap();
        let d = s.geometry.hausdorff(&exact).unwrap();
        assert!(d < 1e-3, "t = {}: Hausdorff distance {d}", s.t);
    }
}

#[test]
fn round_sphere_flow_matches_the_exact_radius() {
    let datum = ExactDatum::RoundSphere { r0: 1.0, level: 3 };
    let g = exact_flow(&datum, 0.0).unwrap();
    let tr = run_flow(&g, 0.2, &FlowOptions { snapshot_interval: 0.05, ..Default::default() }).unwrap();
    for s in tr.snapshots() {
        let exact = exact_flow(&datum, s.t).unwrap();
        assert!(s.geometry.hausdorff(&exact).unwrap() < 5e-3 * datum.radius(s.t).unwrap());
    }
}

#[test]
fn area_decreases_along_flows() {
    for g in [
        Geometry::from(shapes::ellipse(1.0, 0.4, 128)),
        Geometry::from(shapes::figure_eight(128)),
        Geometry::from(shapes::ellipsoid(2, [1.5, 1.0, 0.8])),
        Geometry::from(shapes::torus(2.0, 0.8, 32, 16)),
    ] {
        let tr = run_flow(&g, 0.05, &FlowOptions { snapshot_interval: 0.01, ..Default::default() }).unwrap();
        let m: Vec<f64> = tr.snapshots().iter().map(|s| s.geometry.measure()).collect();
        assert!(m.windows(2).all(|w| w[1] <= w[0]), "{} measures {m:?}", g.kind());
    }
}

#[test]
fn abresch_langer_curve_is_a_shrinker() {
    let shot = shoot_abresch_langer(2, 3, 2048).unwrap();
    let res = shrinker_residual(&shot.curve.into()).unwrap();
    assert!(res.l2 < 1e-3, "residual {res:?}");
}

#[test]
fn shrinker_density_equals_the_closed_form() {
    let circle = make_shrinker(&ShrinkerSpec::Circle { vertices: 1024, dim: 2 }).unwrap();
    let v = huisken_functional(&circle, -1.0, &HeatKernel::new(vector(&[0.0, 0.0]), 0.0, 1).unwrap()).unwrap();
    assert!((v - (2.0 * PI / std::f64::consts::E).sqrt()).abs() < 1e-4);
    let sphere = make_shrinker(&ShrinkerSpec::Sphere { level: 5 }).unwrap();
    let v = huisken_functional(&sphere, -1.0, &HeatKernel::new(vector(&[0.0; 3]), 0.0, 2).unwrap()).unwrap();
    assert!((v - 4.0 / std::f64::consts::E).abs() < 1e-3);
    let cylinder = make_shrinker(&ShrinkerSpec::Cylinder { around: 64, along: 64, half_length: 8.0 * SQRT_2 }).unwrap();
    let v = huisken_functional(&cylinder, -1.0, &HeatKernel::new(vector(&[0.0; 3]), 0.0, 2).unwrap()).unwrap();
    assert!((v - (2.0 * PI / std::f64::consts::E).sqrt()).abs() < 1e-2, "cylinder density {v}");
}

#[test]
fn gauss_bonnet_identity_converges_on_the_torus() {
    let coarse = closed_gb_identity(&shapes::torus(2.0, 1.0, 64, 32), 1.0).unwrap();
    let fine = closed_gb_identity(&shapes::torus(2.0, 1.0, 128, 64), 1.0).unwrap();
    let r = |rep: &mcflab::budget::EstimateReport| rep.term("relative_residual").unwrap();
    assert!(r(&fine) < 0.5 * r(&coarse));
    assert_eq!(fine.term("chi"), Some(0.0));
}

/// Catenoid `r = a cosh(z/a)`: `∫_{B_s}|A|² = 8π tanh(z*/a)` where the
/// ball boundary meets the neck at height `z*`.
#[test]
fn catenoid_curvature_in_a_ball_matches_the_closed_form() {
    let a = 0.5;
    let m = shapes::catenoid(a, 1.5, 256, 192);
    let p = LocalGbParams::unit(3, 2.0, 0.5);
    let rep = local_gb_estimate_with(&m, &p).unwrap();
    let g = |z: f64| (a * (z / a).cosh()).powi(2) + z * z - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let exact = 8.0 * PI * (lo / a).tanh();
    let got = rep.term("integral_A2_inner").unwrap();
    assert!((got - exact).abs() < 0.03 * exact, "{got} vs {exact}");
    assert!(rep.term("integral_H2_outer").unwrap() < 0.05 * exact);
    assert_eq!(rep.term("g"), Some(0.0));
    assert_eq!(rep.term("c_prime"), Some(1.0));
}
