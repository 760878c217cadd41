//! Truncated derivative integrals over the unit disc.
//!
//! `B(s, ε) = ∬_{|z| ≤ 1-ε} |φ'(z)|^s dx dy` is evaluated in polar coordinates
//! on a partition whose radial breakpoints `1 - ε·2^j` line up with the
//! ε-halving schedule of [`truncation_scan`], so scan increments are single
//! annulus integrals.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::conformal::{jacobian_det, jacobian_from_derivative, ConformalMap, MapError, C64};
use crate::quadrature::{GaussJacobi, Neumaier};
use crate::report::{json9, sig9};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("integrand is not finite at z = {0}")]
    NonfiniteIntegrand(C64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("classification needs at least {need} increments, got {have}")]
    InsufficientPoints { have: usize, need: usize },
}

/// Polar quadrature layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Uniform angular panels before feature refinement.
    pub angular_panels: usize,
    /// Gauss–Legendre nodes per angular panel.
    pub angular_nodes: usize,
    /// Relative agreement required between successive angular refinements.
    pub rel_tol: f64,
    /// Maximum number of angular panel halvings.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial_nodes: 12, angular_panels: 32, angular_nodes: 8, rel_tol: 1e-4, max_refinements: 8 }
    }
}

/// One radial band `r_in ≤ |z| ≤ r_out` of the partition.
#[derive(Debug, Clone, Copy)]
struct Band {
    r_in: f64,
    r_out: f64,
}

/// Radial breakpoints for truncation `eps`: bands between `1 - eps·2^{j+1}`
/// and `1 - eps·2^j` while the inner distance stays ≤ 1/2, plus the central disc.
/// Bands are ordered from the boundary inward.
fn bands(eps: f64) -> Vec<Band> {
    let mut out = Vec::new();
    let mut d = eps;
    while 2.0 * d <= 0.5 + 1e-15 {
        out.push(Band { r_in: 1.0 - 2.0 * d, r_out: 1.0 - d });
        d *= 2.0;
    }
    out.push(Band { r_in: 0.0, r_out: 1.0 - d });
    out
}

fn validate_eps(eps: f64) -> Result<(), IntegralError> {
    if (1e-6..=0.5).contains(&eps) {
        Ok(())
    } else {
        Err(IntegralError::InvalidParameter(format!("truncation ε must lie in [1e-6, 0.5], got {eps}")))
    }
}

/// Angular breakpoints: uniform base plus dyadic points `θ_s ± δ·2^m` around
/// each feature direction, `δ` the distance of the band to the circle.
fn angular_breaks(features: &[f64], delta: f64, base: usize) -> Vec<f64> {
    let spacing = TAU / base as f64;
    let mut pts: Vec<f64> = (0..base).map(|k| spacing * k as f64).collect();
    for &t in features {
        pts.push(t);
        let mut off = delta;
        while off < spacing {
            pts.push(t + off);
            pts.push(t - off);
            off *= 2.0;
        }
    }
    let mut pts: Vec<f64> = pts.into_iter().map(|t| t.rem_euclid(TAU)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

struct Layout {
    radial: GaussJacobi,
    angular: GaussJacobi,
}

fn band_integral<F>(
    band: Band,
    features: &[f64],
    spec: &QuadratureSpec,
    layout: &Layout,
    f: &F,
) -> Result<f64, IntegralError>
where
    F: Fn(C64) -> Result<f64, IntegralError> + Sync,
{
    let delta = 1.0 - band.r_out;
    let breaks = angular_breaks(features, delta, spec.angular_panels);
    let (rh, rm) = (0.5 * (band.r_out - band.r_in), 0.5 * (band.r_out + band.r_in));
    let eval = |level: u32| -> Result<f64, IntegralError> {
        let pieces = 1usize << level;
        let mut acc = Neumaier::default();
        for (i, &a) in breaks.iter().enumerate() {
            let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + TAU };
            let step = (b - a) / pieces as f64;
            for p in 0..pieces {
                let lo = a + step * p as f64;
                let (th, tm) = (0.5 * step, lo + 0.5 * step);
                for (xt, wt) in layout.angular.nodes.iter().zip(&layout.angular.weights) {
                    let theta = tm + th * xt;
                    let (sin, cos) = theta.sin_cos();
                    for (xr, wr) in layout.radial.nodes.iter().zip(&layout.radial.weights) {
                        let r = rm + rh * xr;
                        let z = C64::new(r * cos, r * sin);
                        let v = f(z)?;
                        if !v.is_finite() {
                            return Err(IntegralError::NonfiniteIntegrand(z));
                        }
                        acc.add(wt * wr * th * rh * r * v);
                    }
                }
            }
        }
        Ok(acc.sum())
    };
    let mut prev = eval(0)?;
    for level in 1..=spec.max_refinements {
        let next = eval(level)?;
        if (next - prev).abs() <= spec.rel_tol * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Band integrals of `f` over `|z| ≤ 1 - eps`, ordered from the boundary inward.
fn band_values<F>(features: &[f64], eps: f64, spec: &QuadratureSpec, f: &F) -> Result<Vec<f64>, IntegralError>
where
    F: Fn(C64) -> Result<f64, IntegralError> + Sync,
{
    validate_eps(eps)?;
    if spec.radial_nodes == 0 || spec.angular_nodes == 0 || spec.angular_panels == 0 {
        return Err(IntegralError::InvalidParameter("quadrature node counts must be positive".into()));
    }
    let layout = Layout {
        radial: GaussJacobi::legendre(spec.radial_nodes),
        angular: GaussJacobi::legendre(spec.angular_nodes),
    };
    bands(eps)
        .into_par_iter()
        .map(|band| band_integral(band, features, spec, &layout, f))
        .collect()
}

/// `∬_{|z| ≤ 1-eps} f(z) dx dy` with refinement toward the map's boundary features.
pub fn disc_integral<F>(features: &[f64], eps: f64, spec: &QuadratureSpec, f: F) -> Result<f64, IntegralError>
where
    F: Fn(C64) -> Result<f64, IntegralError> + Sync,
{
    let vals = band_values(features, eps, spec, &f)?;
    // Inner bands first: fixed order, compensated.
    Ok(vals.iter().rev().copied().collect::<Neumaier>().sum())
}

fn check_s(s: f64) -> Result<(), IntegralError> {
    if (-4.0..=4.0).contains(&s) {
        Ok(())
    } else {
        Err(IntegralError::InvalidParameter(format!("exponent s must lie in [-4, 4], got {s}")))
    }
}

fn modulus_power(map: &dyn ConformalMap, s: f64) -> impl Fn(C64) -> Result<f64, IntegralError> + Sync + '_ {
    move |z| Ok(map.deriv(z)?.norm().powf(s))
}

/// `B(s, ε) = ∬_{|z| ≤ 1-ε} |φ'|^s dx dy`.
pub fn brennan_integral(map: &dyn ConformalMap, s: f64, eps: f64, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    check_s(s)?;
    disc_integral(&map.boundary_features(), eps, spec, modulus_power(map, s))
}

/// Truncated integrals `B_k = B(s, ε₀ 2^{-k})`, `k = 0..=K`, with increments `g_k = B_{k+1} - B_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCurve {
    pub map: String,
    pub s: f64,
    pub eps: Vec<f64>,
    pub b: Vec<f64>,
    pub g: Vec<f64>,
}

impl TruncationCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,eps,B,g\n");
        for k in 0..self.b.len() {
            let g = self.g.get(k).map_or(String::new(), |g| sig9(*g));
            let _ = writeln!(out, "{k},{},{},{g}", sig9(self.eps[k]), sig9(self.b[k]));
        }
        out
    }
}

pub fn truncation_scan(
    map: &dyn ConformalMap,
    s: f64,
    eps0: f64,
    levels: usize,
    spec: &QuadratureSpec,
) -> Result<TruncationCurve, IntegralError> {
    check_s(s)?;
    if levels > 20 {
        return Err(IntegralError::InvalidParameter(format!("at most 20 levels, got {levels}")));
    }
    validate_eps(eps0)?;
    let eps_min = eps0 * 0.5f64.powi(levels as i32);
    validate_eps(eps_min)?;
    // Bands of the finest truncation, boundary first: band j spans distances
    // [eps_min 2^j, eps_min 2^{j+1}], so B_k drops the first K - k bands.
    let vals = band_values(&map.boundary_features(), eps_min, spec, &modulus_power(map, s))?;
    let eps: Vec<f64> = (0..=levels).map(|k| eps0 * 0.5f64.powi(k as i32)).collect();
    let b: Vec<f64> = (0..=levels)
        .map(|k| vals[levels - k..].iter().rev().copied().collect::<Neumaier>().sum())
        .collect();
    // g_k is exactly the band between ε_{k+1} and ε_k.
    let g: Vec<f64> = (0..levels).map(|k| vals[levels - k - 1]).collect();
    Ok(TruncationCurve { map: map.name(), s, eps, b, g })
}

/// Half-width of the log-divergent slope band.
pub const LOG_BAND: f64 = 0.025;
/// Increments used by the slope fit.
pub const FIT_POINTS: usize = 5;
pub const MIN_INCREMENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VerdictKind {
    Convergent { limit: f64, tail_bound: f64 },
    LogDivergent,
    PowerDivergent { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub kind: VerdictKind,
    /// Least-squares slope of `log2 g_k` against `k`.
    pub slope: f64,
    /// RMS residual of that fit.
    pub residual: f64,
}

impl DivergenceVerdict {
    pub fn label(&self) -> &'static str {
        match self.kind {
            VerdictKind::Convergent { .. } => "convergent",
            VerdictKind::LogDivergent => "log-divergent",
            VerdictKind::PowerDivergent { .. } => "power-divergent",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self.kind {
            VerdictKind::PowerDivergent { q } => Some(q),
            _ => None,
        }
    }

    pub fn limit(&self) -> Option<f64> {
        match self.kind {
            VerdictKind::Convergent { limit, .. } => Some(limit),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let opt = |x: Option<f64>| x.map_or(Value::Null, json9);
        let tail = match self.kind {
            VerdictKind::Convergent { tail_bound, .. } => Some(tail_bound),
            _ => None,
        };
        json!({
            "kind": self.label(),
            "q": opt(self.q()),
            "slope": json9(self.slope),
            "residual": json9(self.residual),
            "limit": opt(self.limit()),
            "tail_bound": opt(tail),
        })
    }
}

/// Least-squares slope and RMS residual of `y` against `0, 1, 2, ...`.
pub fn fit_slope(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
    let sxx: f64 = (0..y.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rss: f64 = y.iter().enumerate().map(|(i, v)| (v - my - slope * (i as f64 - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// Fits the slope of `log2 g_k` over the last five increments.
///
/// `λ > 0.025`: power-divergent with `q = λ`; `|λ| ≤ 0.025`: log-divergent;
/// otherwise convergent with the geometric tail `g_last 2^λ / (1 - 2^λ)` added.
pub fn classify(curve: &TruncationCurve) -> Result<DivergenceVerdict, IntegralError> {
    if curve.g.len() < MIN_INCREMENTS {
        return Err(IntegralError::InsufficientPoints { have: curve.g.len(), need: MIN_INCREMENTS });
    }
    let tail = &curve.g[curve.g.len() - FIT_POINTS..];
    if tail.iter().any(|g| !(*g > 0.0)) {
        return Err(IntegralError::InvalidParameter("increments must be positive to fit a slope".into()));
    }
    let logs: Vec<f64> = tail.iter().map(|g| g.log2()).collect();
    let (slope, residual) = fit_slope(&logs);
    let kind = if slope > LOG_BAND {
        VerdictKind::PowerDivergent { q: slope }
    } else if slope >= -LOG_BAND {
        VerdictKind::LogDivergent
    } else {
        let ratio = 2f64.powf(slope);
        let tail_bound = tail[FIT_POINTS - 1] * ratio / (1.0 - ratio);
        VerdictKind::Convergent { limit: curve.b[curve.b.len() - 1] + tail_bound, tail_bound }
    };
    Ok(DivergenceVerdict { kind, slope, residual })
}

/// `‖φ | L¹_p‖ = B(p, ε)^{1/p}` on the truncated disc.
pub fn sobolev_seminorm(map: &dyn ConformalMap, p: f64, eps: f64, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    if !(1.0..=4.0).contains(&p) {
        return Err(IntegralError::InvalidParameter(format!("seminorm exponent must lie in [1, 4], got {p}")));
    }
    Ok(brennan_integral(map, p, eps, spec)?.powf(1.0 / p))
}

/// `∬ J(z, φ)` over the truncated disc, with `J` assembled from `φ'` via Cauchy–Riemann.
pub fn area_by_jacobian(map: &dyn ConformalMap, eps: f64, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    disc_integral(&map.boundary_features(), eps, spec, |z| {
        Ok(jacobian_det(jacobian_from_derivative(map.deriv(z)?)).abs())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub map: String,
    pub eps: f64,
    /// Area of the image of the truncated disc, `∬ |J|`.
    pub m2: f64,
    /// `2 ‖φ | L¹_2‖²`.
    pub bound: f64,
    pub ratio: f64,
    /// Product-form estimate `∬ |u_x v_y| + ∬ |u_y v_x|`.
    pub holder: f64,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.m2 <= self.bound && self.holder <= self.bound
    }
}

pub fn lemma_area_check(map: &dyn ConformalMap, eps: f64, spec: &QuadratureSpec) -> Result<LemmaReport, IntegralError> {
    let m2 = area_by_jacobian(map, eps, spec)?;
    let bound = 2.0 * sobolev_seminorm(map, 2.0, eps, spec)?.powi(2);
    let holder = disc_integral(&map.boundary_features(), eps, spec, |z| {
        let j = jacobian_from_derivative(map.deriv(z)?);
        Ok((j[0][0] * j[1][1]).abs() + (j[0][1] * j[1][0]).abs())
    })?;
    Ok(LemmaReport { map: map.name(), eps, m2, bound, ratio: m2 / bound, holder })
}

/// Area of the disc of radius `1 - eps`, for comparisons.
pub fn truncated_disc_area(eps: f64) -> f64 {
    PI * (1.0 - eps).powi(2)
}
