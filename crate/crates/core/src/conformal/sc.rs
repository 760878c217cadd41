use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ConformalMap, MapError, C64};
use crate::geometry::{shoelace, PlanarDomain, Point};
use crate::quadrature::{GaussJacobi, Neumaier};

/// Gauss–Jacobi nodes per panel.
pub const PANEL_NODES: usize = 24;
/// Prevertex gaps below this trigger [`ScWarning::Crowding`].
pub const CROWDING_GAP: f64 = 1e-8;
/// Evaluation closer than this to a prevertex is refused.
pub const PREVERTEX_CLEARANCE: f64 = 1e-12;
const MAX_VERTICES: usize = 24;
const MAX_PANEL_DEPTH: u32 = 60;

/// How the three-parameter Möbius freedom of the disc is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScNormalization {
    /// Three consecutive prevertices pinned at equally spaced angles. `shift`
    /// rotates which vertices form the pinned triple.
    FixedTriple { shift: usize },
    /// `φ(0) = center` (polygon centroid when `None`) and the last prevertex
    /// pinned. Keeps prevertex crowding at `e^{-πL/2}` instead of `e^{-πL}`
    /// for an `L × 1` rectangle.
    Centered { center: Option<[f64; 2]> },
}

impl Default for ScNormalization {
    fn default() -> Self {
        Self::FixedTriple { shift: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScOptions {
    pub tol: f64,
    pub normalization: ScNormalization,
    /// Warm start in the solver's log-gap coordinates (see [`ScMap::unknowns`]).
    pub initial: Option<Vec<f64>>,
    pub max_iter: usize,
}

impl Default for ScOptions {
    fn default() -> Self {
        Self { tol: 1e-10, normalization: ScNormalization::default(), initial: None, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScWarning {
    Crowding { min_gap: f64 },
}

/// Schwarz–Christoffel map of the disc onto a polygon:
/// `φ'(z) = C ∏ (1 - z/z_k)^{β_k}` with `z_k = e^{iθ_k}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScMap {
    /// Target vertices, counterclockwise.
    pub vertices: Vec<C64>,
    /// Turning parameters, `Σ β_k = -2`.
    pub beta: Vec<f64>,
    /// Prevertex angles, strictly increasing over less than one turn.
    pub theta: Vec<f64>,
    pub c: C64,
    pub a: C64,
    pub residual: f64,
    pub iterations: usize,
    pub normalization: ScNormalization,
    /// Final solver coordinates, usable as a warm start.
    pub unknowns: Vec<f64>,
    pub warnings: Vec<ScWarning>,
    #[serde(skip)]
    kernel: Option<Kernel>,
}

/// Integrand `∏ (1 - z/z_k)^{β_k}` with cached quadrature rules.
#[derive(Debug, Clone)]
struct Kernel {
    z: Vec<C64>,
    beta: Vec<f64>,
    legendre: GaussJacobi,
    /// Singular end at `x = -1`: weight `(1 + x)^{β_k}`.
    left: Vec<GaussJacobi>,
    /// Singular end at `x = +1`: weight `(1 - x)^{β_k}`.
    right: Vec<GaussJacobi>,
    /// Side `k → k+1`: weight `(1 - x)^{β_{k+1}} (1 + x)^{β_k}`.
    side: Vec<GaussJacobi>,
}

impl Kernel {
    fn new(theta: &[f64], beta: &[f64]) -> Self {
        let n = beta.len();
        Self {
            z: theta.iter().map(|&t| C64::from_polar(1.0, t)).collect(),
            beta: beta.to_vec(),
            legendre: GaussJacobi::legendre(PANEL_NODES),
            left: beta.iter().map(|&b| GaussJacobi::new(PANEL_NODES, 0.0, b)).collect(),
            right: beta.iter().map(|&b| GaussJacobi::new(PANEL_NODES, b, 0.0)).collect(),
            side: (0..n).map(|k| GaussJacobi::new(PANEL_NODES, beta[(k + 1) % n], beta[k])).collect(),
        }
    }

    fn with_theta(&self, theta: &[f64]) -> Self {
        Self { z: theta.iter().map(|&t| C64::from_polar(1.0, t)).collect(), ..self.clone() }
    }

    fn factor(&self, k: usize, z: C64) -> C64 {
        (1.0 - z / self.z[k]).powf(self.beta[k])
    }

    fn integrand(&self, z: C64) -> C64 {
        (0..self.z.len()).fold(C64::new(1.0, 0.0), |acc, k| acc * self.factor(k, z))
    }

    /// `∫_p^q ∏ (1 - ζ/z_k)^{β_k} dζ` along the segment. `ip`/`iq` mark an
    /// endpoint that is the prevertex with that index.
    fn panel(&self, p: C64, q: C64, ip: Option<usize>, iq: Option<usize>, depth: u32) -> Result<C64, MapError> {
        let len = (q - p).norm();
        let clearance = (0..self.z.len())
            .filter(|&j| Some(j) != ip && Some(j) != iq)
            .map(|j| segment_distance(self.z[j], p, q))
            .fold(f64::INFINITY, f64::min);
        if clearance < 0.5 * len && depth < MAX_PANEL_DEPTH {
            let mid = 0.5 * (p + q);
            return Ok(self.panel(p, mid, ip, None, depth + 1)? + self.panel(mid, q, None, iq, depth + 1)?);
        }
        let mid = 0.5 * (p + q);
        let half = 0.5 * (q - p);
        let mut scale = half;
        if let Some(i) = ip {
            scale *= (-half / self.z[i]).powf(self.beta[i]);
        }
        if let Some(j) = iq {
            scale *= (half / self.z[j]).powf(self.beta[j]);
        }
        let fresh;
        let rule = match (ip, iq) {
            (None, None) => &self.legendre,
            (Some(i), None) => &self.left[i],
            (None, Some(j)) => &self.right[j],
            (Some(i), Some(j)) if j == (i + 1) % self.z.len() => &self.side[i],
            (Some(i), Some(j)) => {
                fresh = GaussJacobi::new(PANEL_NODES, self.beta[j], self.beta[i]);
                &fresh
            }
        };
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let zeta = mid + half * x;
            let v = (0..self.z.len())
                .filter(|&k| Some(k) != ip && Some(k) != iq)
                .fold(C64::new(*w, 0.0), |acc, k| acc * self.factor(k, zeta));
            re.add(v.re);
            im.add(v.im);
        }
        let out = scale * C64::new(re.sum(), im.sum());
        if out.re.is_finite() && out.im.is_finite() {
            Ok(out)
        } else {
            Err(MapError::QuadratureNonfinite(q))
        }
    }

    fn side(&self, k: usize) -> Result<C64, MapError> {
        let n = self.z.len();
        self.panel(self.z[k], self.z[(k + 1) % n], Some(k), Some((k + 1) % n), 0)
    }

    fn min_gap(&self, theta: &[f64]) -> f64 {
        let n = theta.len();
        (0..n)
            .map(|k| if k + 1 < n { theta[k + 1] - theta[k] } else { theta[0] + TAU - theta[k] })
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(z: C64, p: C64, q: C64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (((z - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

fn to_c(p: Point) -> C64 {
    C64::new(p.x, p.y)
}

/// Turning parameters `β_k = -(exterior turn at w_k)/π` of a counterclockwise polygon.
fn turning_parameters(w: &[C64]) -> Result<Vec<f64>, MapError> {
    let n = w.len();
    let beta: Vec<f64> = (0..n)
        .map(|k| {
            let prev = w[(k + n - 1) % n];
            let next = w[(k + 1) % n];
            -((next - w[k]) / (w[k] - prev)).arg() / PI
        })
        .collect();
    if let Some(k) = beta.iter().position(|b| !(*b > -1.0 + 1e-12 && *b < 1.0 - 1e-12)) {
        return Err(MapError::InvalidPolygon(format!("degenerate angle at vertex {k}")));
    }
    let total: f64 = beta.iter().sum();
    if (total + 2.0).abs() > 1e-9 {
        return Err(MapError::InvalidPolygon(format!("turning parameters sum to {total}, expected -2")));
    }
    Ok(beta)
}

fn centroid(w: &[C64]) -> C64 {
    let n = w.len();
    let mut area = 0.0;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let (a, b) = (w[k], w[(k + 1) % n]);
        let cross = a.re * b.im - b.re * a.im;
        area += cross;
        acc += (a + b) * cross;
    }
    acc / (3.0 * area)
}

/// Softmax of `[0, u...]` scaled to `total`.
fn gaps(u: &[f64], total: f64) -> Vec<f64> {
    let m = u.iter().copied().fold(0.0f64, f64::max);
    let e: Vec<f64> = std::iter::once(0.0).chain(u.iter().copied()).map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| total * x / s).collect()
}

/// The solver's view of the parameter problem for one normalization.
struct Problem<'a> {
    w: &'a [C64],
    base: Kernel,
    centered: Option<C64>,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.w.len()
    }

    fn unknown_count(&self) -> usize {
        if self.centered.is_some() {
            self.n() - 1
        } else {
            self.n() - 3
        }
    }

    fn theta(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let last = TAU * (n - 1) as f64 / n as f64;
        let mut theta = Vec::with_capacity(n);
        let mut t = last - TAU;
        if self.centered.is_some() {
            for g in gaps(u, TAU).iter().take(n - 1) {
                t += g;
                theta.push(t);
            }
        } else {
            for g in gaps(u, TAU * (n - 2) as f64 / n as f64).iter().take(n - 3) {
                t += g;
                theta.push(t);
            }
            theta.extend((n - 3..n - 1).map(|k| TAU * k as f64 / n as f64));
        }
        theta.push(last);
        theta
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, MapError> {
        let n = self.n();
        let k = self.base.with_theta(&self.theta(u));
        let i0 = k.side(0)?;
        let target0 = (self.w[1] - self.w[0]).norm().ln();
        let mut r = Vec::with_capacity(self.unknown_count());
        for s in 1..n - 2 {
            let model = k.side(s)?.norm().ln() - i0.norm().ln();
            r.push(model - ((self.w[s + 1] - self.w[s]).norm().ln() - target0));
        }
        if let Some(wc) = self.centered {
            let last = n - 1;
            let to_center = k.panel(k.z[last], C64::new(0.0, 0.0), Some(last), None, 0)?;
            let model = to_center / k.side(last)?;
            let target = (wc - self.w[last]) / (self.w[0] - self.w[last]);
            let d = (model / target).ln();
            r.push(d.re);
            r.push(d.im);
        }
        if r.iter().all(|x| x.is_finite()) {
            Ok(r)
        } else {
            Err(MapError::QuadratureNonfinite(C64::new(f64::NAN, f64::NAN)))
        }
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton with a central-difference Jacobian; Levenberg–Marquardt
/// steps when the Newton system is singular or the line search stalls.
fn newton(problem: &Problem, mut u: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64, usize), MapError> {
    let m = u.len();
    let mut f = problem.residual(&u)?;
    for iter in 0..max_iter {
        if max_norm(&f) <= tol {
            return Ok((u, max_norm(&f), iter));
        }
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let h = 1e-6 * (1.0 + u[j].abs());
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let (fp, fm) = (problem.residual(&up)?, problem.residual(&dn)?);
            for i in 0..m {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = -DVector::from_column_slice(&f);
        let newton_step = jac.clone().lu().solve(&rhs).filter(|s| s.iter().all(|x| x.is_finite()));
        let base = l2(&f);
        let try_step = |step: &DVector<f64>| -> Option<(Vec<f64>, Vec<f64>)> {
            let mut lambda = 1.0;
            for _ in 0..=30 {
                let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
                if let Ok(ft) = problem.residual(&trial) {
                    if l2(&ft) < base {
                        return Some((trial, ft));
                    }
                }
                lambda *= 0.5;
            }
            None
        };
        let mut accepted = newton_step.as_ref().and_then(try_step);
        if accepted.is_none() {
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * &rhs;
            let scale = (0..m).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
            let mut mu = 1e-6 * scale;
            while accepted.is_none() && mu < 1e12 * scale {
                let mut a = jtj.clone();
                for i in 0..m {
                    a[(i, i)] += mu;
                }
                if let Some(step) = a.cholesky().map(|c| c.solve(&g)) {
                    accepted = try_step(&step);
                }
                mu *= 10.0;
            }
        }
        match accepted {
            Some((un, fnew)) => {
                u = un;
                f = fnew;
            }
            None => return Err(MapError::NoConvergence { residual: max_norm(&f), tol }),
        }
    }
    let res = max_norm(&f);
    if res <= tol {
        Ok((u, res, max_iter))
    } else {
        Err(MapError::NoConvergence { residual: res, tol })
    }
}

/// Solves the parameter problem with the default fixed-triple normalization.
pub fn sc_solve(polygon: &PlanarDomain, tol: f64) -> Result<ScMap, MapError> {
    sc_solve_with(polygon, &ScOptions { tol, ..ScOptions::default() })
}

pub fn sc_solve_with(polygon: &PlanarDomain, opts: &ScOptions) -> Result<ScMap, MapError> {
    if !polygon.holes.is_empty() || !polygon.slits.is_empty() {
        return Err(MapError::InvalidPolygon("holes and slits are not supported".into()));
    }
    let n = polygon.outer.len();
    if !(3..=MAX_VERTICES).contains(&n) {
        return Err(MapError::InvalidPolygon(format!("{n} vertices; need 3..={MAX_VERTICES}")));
    }
    if !(opts.tol > 0.0) {
        return Err(MapError::Construction(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut ring: Vec<C64> = polygon.outer.iter().copied().map(to_c).collect();
    if shoelace(&polygon.outer) < 0.0 {
        ring.reverse();
    }
    let shift = match opts.normalization {
        ScNormalization::FixedTriple { shift } => shift % n,
        ScNormalization::Centered { .. } => 0,
    };
    ring.rotate_left(shift);
    let beta = turning_parameters(&ring)?;
    let centered = match opts.normalization {
        ScNormalization::Centered { center } => Some(center.map_or_else(|| centroid(&ring), |c| C64::new(c[0], c[1]))),
        ScNormalization::FixedTriple { .. } => None,
    };
    let problem = Problem { w: &ring, base: Kernel::new(&vec![0.0; n], &beta), centered };
    let m = problem.unknown_count();
    let u0 = match &opts.initial {
        Some(u) if u.len() == m => u.clone(),
        Some(u) => {
            return Err(MapError::Construction(format!("warm start has {} unknowns, expected {m}", u.len())));
        }
        None => vec![0.0; m],
    };
    let (u, residual, iterations) = newton(&problem, u0, opts.tol, opts.max_iter)?;
    let mut theta = problem.theta(&u);
    let kernel = problem.base.with_theta(&theta);
    let c = (ring[1] - ring[0]) / kernel.side(0)?;
    let a = ring[0] - c * kernel.panel(C64::new(0.0, 0.0), kernel.z[0], None, Some(0), 0)?;

    // Undo the relabelling so vertex k of the input keeps index k.
    let mut beta = beta;
    ring.rotate_right(shift);
    beta.rotate_right(shift);
    theta.rotate_right(shift);
    for k in 1..n {
        while theta[k] <= theta[k - 1] {
            theta[k] += TAU;
        }
    }
    let mut map = ScMap {
        vertices: ring,
        beta,
        theta,
        c,
        a,
        residual,
        iterations,
        normalization: opts.normalization,
        unknowns: u,
        warnings: vec![],
        kernel: None,
    };
    let kernel = Kernel::new(&map.theta, &map.beta);
    let min_gap = kernel.min_gap(&map.theta);
    if min_gap < CROWDING_GAP {
        map.warnings.push(ScWarning::Crowding { min_gap });
    }
    map.kernel = Some(kernel);
    Ok(map)
}

impl ScMap {
    fn kernel(&self) -> &Kernel {
        self.kernel.as_ref().expect("kernel is built on construction")
    }

    pub fn prevertices(&self) -> &[C64] {
        &self.kernel().z
    }

    pub fn min_gap(&self) -> f64 {
        self.kernel().min_gap(&self.theta)
    }

    /// `φ'(z) = C ∏ (1 - z/z_k)^{β_k}`.
    pub fn sc_deriv(&self, z: C64) -> Result<C64, MapError> {
        self.check(z)?;
        let v = self.c * self.kernel().integrand(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(MapError::QuadratureNonfinite(z))
        }
    }

    /// `φ(z) = A + ∫_0^z φ'` along the ray from the origin.
    pub fn sc_eval(&self, z: C64) -> Result<C64, MapError> {
        self.check(z)?;
        if z == C64::new(0.0, 0.0) {
            return Ok(self.a);
        }
        Ok(self.a + self.c * self.kernel().panel(C64::new(0.0, 0.0), z, None, None, 0)?)
    }

    /// Images of the prevertices, integrated up to the singular endpoint.
    pub fn vertex_images(&self) -> Result<Vec<C64>, MapError> {
        let k = self.kernel();
        (0..k.z.len())
            .map(|j| Ok(self.a + self.c * k.panel(C64::new(0.0, 0.0), k.z[j], None, Some(j), 0)?))
            .collect()
    }

    /// Largest vertex mismatch after least-squares similarity alignment.
    pub fn vertex_error(&self) -> Result<f64, MapError> {
        Ok(similarity_misfit(&self.vertex_images()?, &self.vertices))
    }

    fn check(&self, z: C64) -> Result<(), MapError> {
        if !(z.norm() < 1.0) {
            return Err(MapError::OutsideDisc(z));
        }
        if self.kernel().z.iter().any(|p| (z - p).norm() < PREVERTEX_CLEARANCE) {
            return Err(MapError::QuadratureNonfinite(z));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("SC map serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let mut map: ScMap = serde_json::from_str(text).map_err(|e| MapError::Json(e.to_string()))?;
        if map.theta.len() != map.beta.len() || map.theta.len() != map.vertices.len() || map.theta.len() < 3 {
            return Err(MapError::Json("vertices, theta and beta must have equal length ≥ 3".into()));
        }
        map.kernel = Some(Kernel::new(&map.theta, &map.beta));
        Ok(map)
    }
}

/// Max residual `|s·a_k + t - b_k|` for the best complex similarity `z ↦ s z + t`.
pub fn similarity_misfit(a: &[C64], b: &[C64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<C64>() / n;
    let mb = b.iter().sum::<C64>() / n;
    let num: C64 = a.iter().zip(b).map(|(x, y)| (x - ma).conj() * (y - mb)).sum();
    let den: f64 = a.iter().map(|x| (x - ma).norm_sqr()).sum();
    let s = num / den;
    a.iter().zip(b).map(|(x, y)| (s * (x - ma) + mb - y).norm()).fold(0.0, f64::max)
}

impl ConformalMap for ScMap {
    fn eval(&self, z: C64) -> Result<C64, MapError> {
        self.sc_eval(z)
    }

    fn deriv(&self, z: C64) -> Result<C64, MapError> {
        self.sc_deriv(z)
    }

    fn boundary_features(&self) -> Vec<f64> {
        self.theta.clone()
    }

    fn name(&self) -> String {
        format!("sc[{}]", self.vertices.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_domain, DomainName, DomainParams};
    use approx::assert_relative_eq;

    fn square() -> PlanarDomain {
        let v = [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)];
        PlanarDomain::polygon("square", v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn rectangle(length: f64) -> PlanarDomain {
        builtin_domain(DomainName::Rectangle, &DomainParams { length, ..DomainParams::default() }).unwrap()
    }

    fn hexagon() -> PlanarDomain {
        let v = [(0.0, 0.0), (2.0, -0.3), (3.1, 0.8), (2.4, 2.2), (0.9, 2.6), (-0.6, 1.1)];
        PlanarDomain::polygon("hex", v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_prevertices_are_fourth_roots_of_unity() {
        let map = sc_solve(&square(), 1e-12).unwrap();
        for (k, t) in map.theta.iter().enumerate() {
            assert!((t - map.theta[0] - k as f64 * PI / 2.0).abs() < 1e-9, "{:?}", map.theta);
        }
        assert!(map.vertex_error().unwrap() < 1e-10);
    }

    #[test]
    fn square_scale_matches_lemniscate_constant() {
        let map = sc_solve_with(&square(), &ScOptions { normalization: ScNormalization::Centered { center: None }, ..ScOptions::default() }).unwrap();
        assert!(map.a.norm() < 1e-9);
        // Half-diagonal √2 = |C| ∫_0^1 (1 - t^4)^{-1/2} dt.
        assert_relative_eq!(map.c.norm() * 1.311_028_777_146_06, 2f64.sqrt(), max_relative = 1e-9);
        for w in map.vertex_images().unwrap() {
            assert_relative_eq!(w.norm(), 2f64.sqrt(), max_relative = 1e-9);
        }
    }

    #[test]
    fn eval_near_prevertex_approaches_vertex() {
        let map = sc_solve(&square(), 1e-12).unwrap();
        for (z, w) in map.prevertices().iter().zip(&map.vertices) {
            // Along the ray the gap is (√2/K) ∫_r^1 (1 - t^4)^{-1/2} dt, K the
            // lemniscate integral; it shrinks only like sqrt(1 - r).
            assert!(((map.sc_eval(z * 0.99).unwrap() - w).norm() - 0.108_140_938_982_508).abs() < 1e-9);
            assert!((map.sc_eval(z * (1.0 - 1e-7)).unwrap() - w).norm() < 1e-3);
        }
        assert_eq!(map.sc_eval(C64::new(0.0, 0.0)).unwrap(), map.a);
    }

    #[test]
    fn rectangle_four_reaches_its_vertices() {
        let map = sc_solve(&rectangle(4.0), 1e-11).unwrap();
        assert!(map.vertex_error().unwrap() < 1e-6);
        assert!(map.warnings.is_empty());
        let centered =
            sc_solve_with(&rectangle(4.0), &ScOptions { normalization: ScNormalization::Centered { center: None }, ..ScOptions::default() }).unwrap();
        assert!(centered.vertex_error().unwrap() < 1e-6);
        assert!((centered.a - C64::new(2.0, 0.5)).norm() < 1e-8);
        assert!(centered.min_gap() > map.min_gap());
    }

    #[test]
    fn derivative_matches_central_differences() {
        let map = sc_solve(&hexagon(), 1e-12).unwrap();
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let z = C64::from_polar(0.9 * next().sqrt(), TAU * next());
            let h = 1e-4;
            let f = |t: C64| map.sc_eval(z + t).unwrap();
            let fd = (-f(C64::new(2.0 * h, 0.0)) + f(C64::new(h, 0.0)) * 8.0 - f(C64::new(-h, 0.0)) * 8.0
                + f(C64::new(-2.0 * h, 0.0)))
                / (12.0 * h);
            let d = map.sc_deriv(z).unwrap();
            assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "z = {z}: {fd} vs {d}");
        }
    }

    #[test]
    fn side_ratios_match_targets() {
        let map = sc_solve(&hexagon(), 1e-12).unwrap();
        let img = map.vertex_images().unwrap();
        let n = img.len();
        let side = |v: &[C64], k: usize| (v[(k + 1) % n] - v[k]).norm();
        for k in 0..n {
            assert_relative_eq!(side(&img, k) / side(&img, 0), side(&map.vertices, k) / side(&map.vertices, 0), max_relative = 1e-9);
        }
        assert!(map.theta.windows(2).all(|w| w[0] < w[1]) && map.theta[n - 1] < map.theta[0] + TAU);
    }

    #[test]
    fn other_fixed_triples_give_the_same_polygon() {
        let base = sc_solve(&hexagon(), 1e-12).unwrap();
        for shift in 1..6 {
            let opts = ScOptions { tol: 1e-12, normalization: ScNormalization::FixedTriple { shift }, ..ScOptions::default() };
            let other = sc_solve_with(&hexagon(), &opts).unwrap();
            assert_eq!(other.vertices, base.vertices);
            let misfit = similarity_misfit(&other.vertex_images().unwrap(), &base.vertex_images().unwrap());
            assert!(misfit < 1e-9, "shift {shift}: {misfit}");
        }
    }

    #[test]
    fn errors() {
        let map = sc_solve(&square(), 1e-12).unwrap();
        assert!(matches!(map.sc_eval(map.prevertices()[1] * (1.0 - 1e-13)), Err(MapError::QuadratureNonfinite(_))));
        assert!(matches!(map.sc_eval(C64::new(0.0, 1.0)), Err(MapError::OutsideDisc(_))));
        let disc = builtin_domain(DomainName::SlitDisc, &DomainParams::default()).unwrap();
        assert!(matches!(sc_solve(&disc, 1e-10), Err(MapError::InvalidPolygon(_))));
        let opts = ScOptions { tol: 1e-12, max_iter: 1, ..ScOptions::default() };
        assert!(matches!(sc_solve_with(&hexagon(), &opts), Err(MapError::NoConvergence { .. })));
    }

    #[test]
    fn json_round_trip() {
        let map = sc_solve(&hexagon(), 1e-12).unwrap();
        let back = ScMap::from_json(&map.to_json()).unwrap();
        let z = C64::new(0.2, -0.3);
        assert_eq!(back.sc_eval(z).unwrap(), map.sc_eval(z).unwrap());
        let v: serde_json::Value = serde_json::from_str(&map.to_json()).unwrap();
        assert!(v["theta"].is_array() && v["beta"].is_array() && v["c"].is_array() && v["a"].is_array());
    }
}
