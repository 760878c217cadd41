//! Witness lower bounds for the Poincaré constant, the composition-operator
//! inequality, and the rectangle family linking seminorms to diameters.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::conformal::{builtin_map, sc_solve_with, ConformalMap, MapError, MapName, ScMap, ScNormalization, ScOptions, C64};
use crate::geodesic::{distance_witness_on, geodesic_diameter, grid_gradient, GeodesicError, GeodesicEstimate, GridGraph};
use crate::geometry::{builtin_domain, DomainName, DomainParams, GeometryError, GridMask, PlanarDomain, Point};
use crate::integrals::{disc_integral, sobolev_seminorm, IntegralError, QuadratureSpec};
use crate::report::{json9, sig9};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("witness has no finite samples")]
    EmptyMask,
    #[error("witness gradient vanishes")]
    ZeroGradient,
    #[error("witness cannot be evaluated at the image point {0}")]
    WitnessNotEvaluable(C64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    /// `f = (a x + b y) / sqrt(a² + b²)`.
    Linear { a: f64, b: f64 },
    /// Intrinsic distance from `x0`.
    Distance { x0: Point },
    Custom { tag: String },
}

impl WitnessKind {
    pub fn tag(&self) -> String {
        match self {
            Self::Linear { a, b } => format!("linear({},{})", sig9(*a), sig9(*b)),
            Self::Distance { x0 } => format!("distance({},{})", sig9(x0.x), sig9(x0.y)),
            Self::Custom { tag } => tag.clone(),
        }
    }
}

/// Witness function sampled at the inside cells of a grid mask.
#[derive(Debug, Clone)]
pub struct Witness {
    pub kind: WitnessKind,
    pub mask: GridMask,
    /// Per cell; non-finite outside the domain or where undefined.
    pub values: Vec<f64>,
    /// `‖∇f‖_∞` over the sampled domain.
    pub grad_sup: f64,
}

/// Largest grid gradient over cells at least `h` away from slits.
fn sampled_grad_sup(graph: &GridGraph, values: &[f64]) -> f64 {
    let h = graph.h();
    (0..values.len())
        .into_par_iter()
        .filter(|&c| graph.mask.inside[c] && !graph.index.any_within(graph.mask.center_of(c), h, true))
        .filter_map(|c| grid_gradient(graph, values, c).map(|(gx, gy)| gx.hypot(gy)))
        .reduce(|| 0.0, f64::max)
}

fn sample(graph: &GridGraph, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
    (0..graph.mask.inside.len())
        .into_par_iter()
        .map(|c| if graph.mask.inside[c] { f(graph.mask.center_of(c)) } else { f64::NAN })
        .collect()
}

impl Witness {
    /// Unit-gradient linear function; the gradient bound is measured on the grid.
    pub fn linear(domain: &PlanarDomain, a: f64, b: f64, h: f64) -> Result<Self, PoincareError> {
        let norm = a.hypot(b);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(PoincareError::InvalidParameter("linear witness needs (a, b) ≠ 0".into()));
        }
        let graph = GridGraph::new(domain, h)?;
        let values = sample(&graph, |p| (a * p.x + b * p.y) / norm);
        let grad_sup = sampled_grad_sup(&graph, &values);
        Ok(Self { kind: WitnessKind::Linear { a, b }, mask: graph.mask, values, grad_sup })
    }

    /// Intrinsic distance from `x0`, which is 1-Lipschitz along paths in the
    /// domain; the gradient bound is that exact constant.
    pub fn distance(domain: &PlanarDomain, x0: Point, h: f64) -> Result<Self, PoincareError> {
        if !domain.contains(x0) {
            return Err(GeodesicError::OutsideDomain(x0).into());
        }
        let graph = GridGraph::new(domain, h)?;
        let w = distance_witness_on(&graph, x0)?;
        Ok(Self { kind: WitnessKind::Distance { x0 }, mask: graph.mask, values: w.field.dist, grad_sup: 1.0 })
    }

    /// Arbitrary sampled function with a grid-measured gradient bound.
    pub fn custom(
        domain: &PlanarDomain,
        tag: impl Into<String>,
        h: f64,
        f: impl Fn(Point) -> f64 + Sync,
    ) -> Result<Self, PoincareError> {
        let graph = GridGraph::new(domain, h)?;
        let values = sample(&graph, f);
        let grad_sup = sampled_grad_sup(&graph, &values);
        Ok(Self { kind: WitnessKind::Custom { tag: tag.into() }, mask: graph.mask, values, grad_sup })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareBound {
    #[serde(rename = "K_lower")]
    pub k_lower: f64,
    pub c0: f64,
    pub oscillation: f64,
    /// Exponent of the gradient seminorm; `inf` for the sup norm.
    pub p: f64,
    pub witness: String,
}

impl PoincareBound {
    pub fn to_json(&self) -> Value {
        json!({
            "K_lower": json9(self.k_lower),
            "c0": json9(self.c0),
            "oscillation": json9(self.oscillation),
            "p": json9(self.p),
            "witness": self.witness,
        })
    }
}

/// `K ≥ (sup f - inf f) / (2 ‖∇f‖_∞)`, centered at the midrange `c₀`.
pub fn witness_bound(witness: &Witness) -> Result<PoincareBound, PoincareError> {
    let (lo, hi) = witness
        .mask
        .inside
        .iter()
        .zip(&witness.values)
        .filter(|(&ins, v)| ins && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| (lo.min(v), hi.max(v)));
    if lo > hi {
        return Err(PoincareError::EmptyMask);
    }
    if !(witness.grad_sup > 0.0) {
        return Err(PoincareError::ZeroGradient);
    }
    let oscillation = hi - lo;
    Ok(PoincareBound {
        k_lower: oscillation / (2.0 * witness.grad_sup),
        c0: 0.5 * (hi + lo),
        oscillation,
        p: f64::INFINITY,
        witness: witness.kind.tag(),
    })
}

/// Witness on the image domain for the composition inequality: a function of
/// `w = φ(z)` together with its gradient sup norm.
pub struct ImageWitness {
    pub tag: String,
    pub grad_sup: f64,
    pub f: Box<dyn Fn(C64) -> Option<f64> + Sync + Send>,
}

impl ImageWitness {
    /// `(a u + b v) / sqrt(a² + b²)`.
    pub fn linear(a: f64, b: f64) -> Self {
        let n = a.hypot(b);
        Self {
            tag: format!("linear({},{})", sig9(a), sig9(b)),
            grad_sup: 1.0,
            f: Box::new(move |w| Some((a * w.re + b * w.im) / n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub map: String,
    pub witness: String,
    pub p: f64,
    pub eps: f64,
    pub h: f64,
    /// `‖∇(f∘φ)‖_{L_p}` over the truncated disc.
    pub lhs: f64,
    /// `A ‖∇f‖_∞` with `A = ‖φ'‖_{L_p}`.
    pub rhs: f64,
    pub slack: f64,
    pub tau: f64,
}

impl CompositionReport {
    pub fn holds(&self) -> bool {
        self.slack >= -self.tau * self.rhs
    }
}

/// Default relative tolerance for the composition inequality.
pub const COMPOSITION_TAU: f64 = 0.05;

/// Central-difference gradient of `f∘φ` at `z` with step `h`.
pub fn pullback_gradient(map: &dyn ConformalMap, witness: &ImageWitness, z: C64, h: f64) -> Result<(f64, f64), PoincareError> {
    let g = |dz: C64| -> Result<f64, PoincareError> {
        let w = map.eval(z + dz)?;
        (witness.f)(w).ok_or(PoincareError::WitnessNotEvaluable(w))
    };
    let gx = (g(C64::new(h, 0.0))? - g(C64::new(-h, 0.0))?) / (2.0 * h);
    let gy = (g(C64::new(0.0, h))? - g(C64::new(0.0, -h))?) / (2.0 * h);
    Ok((gx, gy))
}

/// Checks `‖∇(f∘φ)‖_{L_p} ≤ (1 + τ) ‖φ'‖_{L_p} ‖∇f‖_∞` on `|z| ≤ 1 - ε`.
/// The left side uses the same quadrature nodes as the seminorm.
pub fn composition_check(
    map: &dyn ConformalMap,
    witness: &ImageWitness,
    p: f64,
    eps: f64,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<CompositionReport, PoincareError> {
    if !(p > 2.0) {
        return Err(PoincareError::InvalidParameter(format!("composition check needs p > 2, got {p}")));
    }
    if !(h > 0.0 && h < 0.5 * eps) {
        return Err(PoincareError::InvalidParameter(format!("difference step must lie in (0, ε/2), got {h}")));
    }
    let failure = std::sync::Mutex::new(None);
    let integral = disc_integral(&map.boundary_features(), eps, spec, |z| {
        match pullback_gradient(map, witness, z, h) {
            Ok((gx, gy)) => Ok(gx.hypot(gy).powf(p)),
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                Ok(f64::NAN)
            }
        }
    });
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let lhs = integral?.powf(1.0 / p);
    let rhs = sobolev_seminorm(map, p, eps, spec)? * witness.grad_sup;
    Ok(CompositionReport {
        map: map.name(),
        witness: witness.tag.clone(),
        p,
        eps,
        h,
        lhs,
        rhs,
        slack: rhs - lhs,
        tau: COMPOSITION_TAU,
    })
}

/// A registered (map, witness, p, ε) combination.
pub struct CompositionCase {
    pub map: Box<dyn ConformalMap>,
    pub witness: ImageWitness,
    pub p: f64,
    pub eps: f64,
}

/// The five registered pairs; the first is the exact-equality case.
pub fn registered_composition_cases() -> Vec<CompositionCase> {
    let case = |name, witness, p, eps| CompositionCase { map: Box::new(builtin_map(name)), witness, p, eps };
    let re_w = ImageWitness { tag: "re".into(), grad_sup: 1.0, f: Box::new(|w: C64| Some(w.re)) };
    vec![
        case(MapName::Identity, ImageWitness::linear(1.0, 0.0), 3.0, 0.1),
        case(MapName::Identity, ImageWitness::linear(1.0, 1.0), 4.0, 0.1),
        case(MapName::Koebe, re_w, 3.0, 0.1),
        case(MapName::Strip, ImageWitness::linear(1.0, 1.0), 3.0, 0.05),
        case(MapName::Koebe, ImageWitness::linear(1.0, -1.0), 4.0, 0.2),
    ]
}

/// Map of the disc onto `(0, L) × (0, 1)` with `φ(0)` at the center, reached
/// by continuation in `L` from the unit square.
pub fn rectangle_map(length: f64, tol: f64) -> Result<ScMap, PoincareError> {
    if !(1.0..=16.0).contains(&length) {
        return Err(PoincareError::InvalidParameter(format!("rectangle length must lie in [1, 16], got {length}")));
    }
    let steps = ((length - 1.0) / 0.5).ceil().max(1.0) as usize;
    let mut initial = None;
    let mut last = None;
    for k in 1..=steps {
        let l = 1.0 + (length - 1.0) * k as f64 / steps as f64;
        let dom = builtin_domain(DomainName::Rectangle, &DomainParams { length: l, ..DomainParams::default() })?;
        let opts = ScOptions { tol, normalization: ScNormalization::Centered { center: None }, initial, max_iter: 200 };
        let map = sc_solve_with(&dom, &opts)?;
        initial = Some(map.unknowns.clone());
        last = Some(map);
    }
    Ok(last.expect("at least one continuation step"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    #[serde(rename = "L")]
    pub length: f64,
    pub diam: f64,
    pub diam_lower: f64,
    pub seminorm: f64,
    pub p: f64,
    pub eps: f64,
    /// Smallest prevertex gap of the SC map.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub rows: Vec<ChainRow>,
    pub seminorm_increasing: bool,
    /// Smallest ratio `S_{next} / S_{prev}` across consecutive members.
    pub min_growth: f64,
    /// `D_L / S_L` never increases along the family.
    pub diam_over_seminorm_bounded: bool,
}

impl ChainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,diam,seminorm,p\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", sig9(r.length), sig9(r.diam), sig9(r.seminorm), sig9(r.p));
        }
        out
    }
}

/// For each rectangle `R_L`: grid diameter `D_L` and seminorm `S_L = ‖φ_L | L¹_p‖`.
pub fn theorem_chain(
    lengths: &[f64],
    p: f64,
    eps: f64,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<ChainReport, PoincareError> {
    let rows = lengths
        .par_iter()
        .map(|&length| -> Result<ChainRow, PoincareError> {
            let dom = builtin_domain(DomainName::Rectangle, &DomainParams { length, ..DomainParams::default() })?;
            let d: GeodesicEstimate = geodesic_diameter(&dom, h, 4)?;
            let map = rectangle_map(length, 1e-11)?;
            let seminorm = sobolev_seminorm(&map, p, eps, spec)?;
            Ok(ChainRow { length, diam: d.raw, diam_lower: d.lower, seminorm, p, eps, min_gap: map.min_gap() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(&ChainRow, &ChainRow)> = rows.iter().zip(rows.iter().skip(1)).collect();
    Ok(ChainReport {
        seminorm_increasing: pairs.iter().all(|(a, b)| b.seminorm > a.seminorm),
        min_growth: pairs.iter().map(|(a, b)| b.seminorm / a.seminorm).fold(f64::INFINITY, f64::min),
        diam_over_seminorm_bounded: pairs.iter().all(|(a, b)| b.diam / b.seminorm <= a.diam / a.seminorm),
        rows,
    })
}

/// `K_lower(X) = X / (2√2)` for the strip witness `(x + y)/√2`.
pub fn strip_witness_prediction(xmax: f64) -> f64 {
    xmax / (2.0 * SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dom(name: DomainName, f: impl FnOnce(&mut DomainParams)) -> PlanarDomain {
        let mut p = DomainParams::default();
        f(&mut p);
        builtin_domain(name, &p).unwrap()
    }

    #[test]
    fn disc_linear_witness() {
        let h = 0.01;
        let w = Witness::linear(&dom(DomainName::Disc, |_| {}), 1.0, 0.0, h).unwrap();
        assert_relative_eq!(w.grad_sup, 1.0, max_relative = 1e-9);
        let b = witness_bound(&w).unwrap();
        assert!(b.k_lower >= 1.0 - 2.0 * h, "{b:?}");
        assert!(b.c0.abs() < 1e-9);
        assert!(b.p.is_infinite());
        let j = b.to_json();
        assert!(j["K_lower"].is_number() && j["witness"] == "linear(1,0)" && j["p"] == "inf");
    }

    #[test]
    fn strip_witness_grows_linearly() {
        for x in [5.0, 10.0, 20.0] {
            let w = Witness::linear(&dom(DomainName::Strip, |p| p.xmax = x), 1.0, 1.0, 0.01).unwrap();
            let b = witness_bound(&w).unwrap();
            assert!((b.k_lower / strip_witness_prediction(x) - 1.0).abs() < 0.05, "X = {x}: {b:?}");
        }
    }

    #[test]
    fn comb_distance_witness_increases_with_slits() {
        let k: Vec<f64> = [2, 4]
            .iter()
            .map(|&n| {
                let d = dom(DomainName::Comb, |p| p.n_slits = n);
                let w = Witness::distance(&d, Point::new(0.0, 1.75), 0.01).unwrap();
                witness_bound(&w).unwrap().k_lower
            })
            .collect();
        assert!(k[1] > k[0], "{k:?}");
    }

    #[test]
    fn empty_and_flat_witnesses_are_rejected() {
        let d = dom(DomainName::Rectangle, |p| p.length = 1.0);
        let flat = Witness::custom(&d, "flat", 0.1, |_| 3.0).unwrap();
        assert!(matches!(witness_bound(&flat), Err(PoincareError::ZeroGradient)));
        let empty = Witness::custom(&d, "nan", 0.1, |_| f64::NAN).unwrap();
        assert!(matches!(witness_bound(&empty), Err(PoincareError::EmptyMask)));
        assert!(Witness::distance(&d, Point::new(5.0, 5.0), 0.1).is_err());
    }

    #[test]
    fn identity_composition_is_an_equality() {
        let id = builtin_map(MapName::Identity);
        let r = composition_check(&id, &ImageWitness::linear(1.0, 0.0), 3.0, 0.1, 1e-4, &QuadratureSpec::default()).unwrap();
        assert!(r.slack.abs() <= 1e-9 * r.rhs, "{r:?}");
    }

    #[test]
    fn registered_pairs_hold() {
        for case in registered_composition_cases() {
            let r = composition_check(case.map.as_ref(), &case.witness, case.p, case.eps, 1e-4, &QuadratureSpec::default()).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!(r.lhs > 0.0 && r.lhs.is_finite());
        }
    }

    #[test]
    fn composition_errors() {
        let id = builtin_map(MapName::Identity);
        let spec = QuadratureSpec::default();
        let w = ImageWitness::linear(1.0, 0.0);
        assert!(composition_check(&id, &w, 2.0, 0.1, 1e-4, &spec).is_err());
        assert!(composition_check(&id, &w, 3.0, 0.1, 0.1, &spec).is_err());
        let picky = ImageWitness { tag: "upper".into(), grad_sup: 1.0, f: Box::new(|w: C64| (w.im > 0.0).then_some(w.re)) };
        assert!(matches!(composition_check(&id, &picky, 3.0, 0.1, 1e-4, &spec), Err(PoincareError::WitnessNotEvaluable(_))));
    }

    #[test]
    fn rectangle_chain_rows() {
        let r = theorem_chain(&[2.0, 4.0], 3.0, 1e-3, 0.02, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            let diag = (row.length * row.length + 1.0).sqrt();
            assert!((row.diam / diag - 1.0).abs() < 0.03, "{row:?}");
            assert!(row.seminorm.is_finite());
        }
        assert!(r.seminorm_increasing);
        assert!(r.to_csv().starts_with("L,diam,seminorm,p\n2,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn bound_is_shift_invariant_and_scales(c in -50.0..50.0f64, lambda in 0.1..10.0f64) {
            let d = dom(DomainName::Rectangle, |p| p.length = 2.0);
            let f = |p: Point| (p.x * 0.7).sin() + p.y * p.y;
            let base = witness_bound(&Witness::custom(&d, "f", 0.05, f).unwrap()).unwrap();
            let shifted = witness_bound(&Witness::custom(&d, "f+c", 0.05, |p| f(p) + c).unwrap()).unwrap();
            let scaled = witness_bound(&Witness::custom(&d, "λf", 0.05, |p| lambda * f(p)).unwrap()).unwrap();
            prop_assert!((shifted.k_lower - base.k_lower).abs() <= 1e-9 * base.k_lower.max(1.0));
            prop_assert!((shifted.c0 - base.c0 - c).abs() <= 1e-9 * c.abs().max(1.0));
            prop_assert!((scaled.k_lower - base.k_lower).abs() <= 1e-9 * base.k_lower);
            prop_assert!((scaled.oscillation - lambda * base.oscillation).abs() <= 1e-9 * scaled.oscillation);
        }

        #[test]
        fn midrange_minimizes_sup_deviation(c in -2.0..2.0f64) {
            let d = dom(DomainName::Rectangle, |p| p.length = 2.0);
            let w = Witness::custom(&d, "f", 0.05, |p| p.x * p.y).unwrap();
            let b = witness_bound(&w).unwrap();
            let dev = |c0: f64| w.values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max((v - c0).abs()));
            prop_assert!(dev(b.c0) <= dev(c) + 1e-12);
            prop_assert!((dev(b.c0) - 0.5 * b.oscillation).abs() < 1e-12);
        }

        #[test]
        fn chain_rule_domination(r in 0.0..0.85f64, t in 0.0..std::f64::consts::TAU, which in 0usize..5) {
            let cases = registered_composition_cases();
            let case = &cases[which];
            let z = C64::from_polar(r, t);
            let (gx, gy) = pullback_gradient(case.map.as_ref(), &case.witness, z, 1e-5).unwrap();
            let d = case.map.deriv(z).unwrap().norm();
            prop_assert!(gx.hypot(gy) <= (case.witness.grad_sup + 1e-6) * d * (1.0 + 1e-6));
        }
    }
}
