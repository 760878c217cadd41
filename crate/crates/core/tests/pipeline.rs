//! End-to-end checks through the public API, crossing module boundaries.

use approx::assert_relative_eq;
use conflab_core::conformal::{sc_solve, ConformalMap};
use conflab_core::geodesic::{geodesic_diameter_at, geodesic_distance};
use conflab_core::integrals::{area_by_jacobian, brennan_integral, classify, truncation_scan, QuadratureSpec, VerdictKind};
use conflab_core::poincare::{rectangle_map, witness_bound, Witness};
use conflab_core::{builtin_domain, builtin_map, DomainName, DomainParams, MapName, Point, C64};

fn rect(length: f64) -> conflab_core::PlanarDomain {
    builtin_domain(DomainName::Rectangle, &DomainParams { length, ..DomainParams::default() }).unwrap()
}

#[test]
fn polygon_area_from_sc_jacobian() {
    // ∫|φ'|² over the disc is the area of the image polygon.
    let map = sc_solve(&rect(2.0), 1e-11).unwrap();
    let spec = QuadratureSpec::default();
    let curve = truncation_scan(&map, 2.0, 0.125, 12, &spec).unwrap();
    match classify(&curve).unwrap().kind {
        VerdictKind::Convergent { limit, .. } => assert_relative_eq!(limit, 2.0, max_relative = 1e-3),
        other => panic!("{other:?}"),
    }
    assert!(area_by_jacobian(&map, 1e-3, &spec).unwrap() < 2.0);
}

#[test]
fn sc_images_stay_in_the_polygon() {
    let poly = rect(3.0);
    let map = rectangle_map(3.0, 1e-11).unwrap();
    for k in 0..200 {
        let z = C64::from_polar(0.98 * ((k as f64 + 0.5) / 200.0).sqrt(), 2.399_963 * k as f64);
        let w = map.eval(z).unwrap();
        assert!(poly.contains(Point::new(w.re, w.im)), "{z} -> {w}");
    }
}

#[test]
fn geodesic_and_witness_agree_on_the_rectangle() {
    let dom = rect(4.0);
    let diag = geodesic_distance(&dom, Point::new(0.05, 0.05), Point::new(3.95, 0.95), 0.02).unwrap();
    assert!(diag.lower <= 3.9f64.hypot(0.9) && diag.raw >= 3.9f64.hypot(0.9) - 0.05, "{diag:?}");
    let diam = geodesic_diameter_at(&dom, 0.02, 4).unwrap();
    let w = Witness::distance(&dom, Point::new(0.05, 0.5), 0.02).unwrap();
    let k = witness_bound(&w).unwrap().k_lower;
    // A 1-Lipschitz witness has oscillation at most the diameter.
    assert!(2.0 * k <= diam.raw + 1e-9, "{k} vs {diam:?}");
    assert!(2.0 * k > 3.8);
}

#[test]
fn koebe_brennan_integral_grows_with_s() {
    let k = builtin_map(MapName::Koebe);
    let spec = QuadratureSpec::default();
    let vals: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&s| brennan_integral(&k, s, 0.01, &spec).unwrap()).collect();
    assert_relative_eq!(vals[0], std::f64::consts::PI * 0.99f64.powi(2), max_relative = 1e-9);
    assert!(vals[0] < vals[1] && vals[1] < vals[2]);
}

#[test]
fn map_and_domain_json_round_trips() {
    let d = builtin_domain(DomainName::Cusp, &DomainParams::default()).unwrap();
    let back = conflab_core::PlanarDomain::from_json(&d.to_json()).unwrap();
    assert_eq!(back.polygon_area(), d.polygon_area());
    let s = builtin_map(MapName::Strip);
    let again = conflab_core::MapExpr::from_json("strip", &s.to_json()).unwrap();
    let z = C64::new(0.3, -0.4);
    assert_eq!(again.deriv(z).unwrap(), s.deriv(z).unwrap());
}
