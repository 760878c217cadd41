//! Registered experiments. Each one computes typed results and renders them
//! as a JSON summary plus CSV tables.

use std::fmt::Write as _;

use conflab_core::conformal::{builtin_map, MapName};
use conflab_core::geodesic::{geodesic_diameter, GeodesicEstimate};
use conflab_core::geometry::{builtin_domain, DomainName, DomainParams};
use conflab_core::integrals::{
    classify, fit_slope, lemma_area_check, truncation_scan, DivergenceVerdict, LemmaReport, QuadratureSpec,
    TruncationCurve,
};
use conflab_core::poincare::{strip_witness_prediction, theorem_chain, witness_bound, ChainReport, PoincareBound, Witness};
use conflab_core::report::{json9, sig9};
use serde_json::{json, Value};

use crate::error::CliError;

pub const NAMES: [&str; 7] =
    ["koebe-range", "strip-range", "cusp-area", "comb-diameter", "strip-witness", "rectangle-chain", "lemma-check"];

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub results: Value,
    pub checks: Value,
    pub tables: Vec<Artifact>,
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

fn opt9(x: Option<f64>) -> String {
    x.map_or(String::new(), sig9)
}

// ---------------------------------------------------------------- ranges

#[derive(Debug, Clone, PartialEq)]
pub struct RangeParams {
    pub s: Vec<f64>,
    pub eps0: f64,
    pub levels: usize,
}

impl RangeParams {
    pub fn koebe() -> Self {
        Self { s: vec![-1.0, 0.0, 0.5, 0.65, 2.0 / 3.0, 1.0, 2.0], eps0: 0.125, levels: 16 }
    }

    pub fn strip() -> Self {
        Self { s: vec![1.5, 2.0, 2.5, 3.0], eps0: 0.125, levels: 16 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeRow {
    pub s: f64,
    pub verdict: DivergenceVerdict,
    pub curve: TruncationCurve,
}

pub fn brennan_range(map: MapName, params: &RangeParams) -> Result<Vec<RangeRow>, CliError> {
    let m = builtin_map(map);
    let spec = QuadratureSpec::default();
    params
        .s
        .iter()
        .map(|&s| {
            let curve = truncation_scan(&m, s, params.eps0, params.levels, &spec)?;
            Ok(RangeRow { s, verdict: classify(&curve)?, curve })
        })
        .collect()
}

pub fn render_range(name: &str, rows: &[RangeRow]) -> Rendered {
    let table = csv(
        "s,kind,slope,q,limit,residual",
        rows.iter().map(|r| {
            vec![
                sig9(r.s),
                r.verdict.label().into(),
                sig9(r.verdict.slope),
                opt9(r.verdict.q()),
                opt9(r.verdict.limit()),
                sig9(r.verdict.residual),
            ]
        }),
    );
    let mut tables = vec![Artifact { file: format!("{name}.csv"), contents: table }];
    for (i, r) in rows.iter().enumerate() {
        tables.push(Artifact { file: format!("{name}-curve{i}.csv"), contents: r.curve.to_csv() });
    }
    // Smallest s whose verdict is not convergent.
    let flip = rows
        .iter()
        .filter(|r| r.verdict.limit().is_none())
        .map(|r| r.s)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));
    let consistent = rows
        .iter()
        .all(|r| flip.is_none_or(|f| (r.s < f) == r.verdict.limit().is_some()));
    Rendered {
        results: Value::Array(rows.iter().map(|r| json!({"s": json9(r.s), "verdict": r.verdict.to_json()})).collect()),
        checks: json!({"first_divergent_s": flip.map(json9), "single_flip": consistent}),
        tables,
    }
}

// ---------------------------------------------------------------- cusp area

#[derive(Debug, Clone, PartialEq)]
pub struct CuspParams {
    pub alpha: Vec<f64>,
    /// Truncations run over `X = 2^1 .. 2^doublings`.
    pub doublings: usize,
    pub vertices_per_doubling: usize,
}

impl Default for CuspParams {
    fn default() -> Self {
        Self { alpha: vec![1.5, 2.0, 3.0], doublings: 16, vertices_per_doubling: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuspRow {
    pub alpha: f64,
    /// Extrapolated area.
    pub area: f64,
    pub exact: f64,
    /// Polygon area at the largest truncation.
    pub truncated: f64,
    pub slope: f64,
}

impl CuspRow {
    pub fn rel_err(&self) -> f64 {
        (self.area - self.exact).abs() / self.exact
    }
}

/// Polygon areas of the truncations `x < 2^k`, extended by the geometric tail
/// fitted to the last five increments.
pub fn cusp_area(params: &CuspParams) -> Result<Vec<CuspRow>, CliError> {
    if params.doublings < 7 {
        return Err(CliError::Usage("cusp-area needs at least 7 doublings".into()));
    }
    params
        .alpha
        .iter()
        .map(|&alpha| {
            let areas = (1..=params.doublings)
                .map(|k| {
                    let dp = DomainParams {
                        alpha,
                        xmax: 2f64.powi(k as i32),
                        cusp_vertices_per_doubling: params.vertices_per_doubling,
                        ..DomainParams::default()
                    };
                    Ok(builtin_domain(DomainName::Cusp, &dp)?.polygon_area())
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            let g: Vec<f64> = areas.windows(2).map(|w| w[1] - w[0]).collect();
            let logs: Vec<f64> = g[g.len() - 5..].iter().map(|v| v.log2()).collect();
            let (slope, _) = fit_slope(&logs);
            let ratio = 2f64.powf(slope);
            let truncated = areas[areas.len() - 1];
            let area = if ratio < 1.0 { truncated + g[g.len() - 1] * ratio / (1.0 - ratio) } else { f64::INFINITY };
            Ok(CuspRow { alpha, area, exact: 1.0 / (alpha - 1.0), truncated, slope })
        })
        .collect()
}

pub fn render_cusp(rows: &[CuspRow]) -> Rendered {
    let table = csv(
        "alpha,area,exact,rel_err,truncated,slope",
        rows.iter().map(|r| {
            vec![sig9(r.alpha), sig9(r.area), sig9(r.exact), sig9(r.rel_err()), sig9(r.truncated), sig9(r.slope)]
        }),
    );
    Rendered {
        results: Value::Array(
            rows.iter()
                .map(|r| json!({"alpha": json9(r.alpha), "area": json9(r.area), "exact": json9(r.exact), "rel_err": json9(r.rel_err())}))
                .collect(),
        ),
        checks: json!({"within_1_percent": rows.iter().all(|r| r.rel_err() < 0.01)}),
        tables: vec![Artifact { file: "cusp-area.csv".into(), contents: table }],
    }
}

// ---------------------------------------------------------------- comb diameter

#[derive(Debug, Clone, PartialEq)]
pub struct CombParams {
    pub n: Vec<f64>,
    pub r: f64,
    pub h: f64,
    pub landmarks: usize,
}

impl Default for CombParams {
    fn default() -> Self {
        Self { n: vec![2.0, 4.0, 6.0, 8.0], r: 0.1, h: 0.005, landmarks: 4 }
    }
}

pub fn comb_diameter(params: &CombParams) -> Result<Vec<(usize, GeodesicEstimate)>, CliError> {
    params
        .n
        .iter()
        .map(|&n| {
            if !(n >= 1.0 && n.fract() == 0.0) {
                return Err(CliError::Usage(format!("slit counts must be positive integers, got {n}")));
            }
            let dp = DomainParams { n_slits: n as usize, r: params.r, ..DomainParams::default() };
            let d = builtin_domain(DomainName::Comb, &dp)?;
            Ok((n as usize, geodesic_diameter(&d, params.h, params.landmarks)?))
        })
        .collect()
}

pub fn render_comb(rows: &[(usize, GeodesicEstimate)]) -> Rendered {
    let table = csv(
        "n,diam,lower,h,converged",
        rows.iter().map(|(n, e)| vec![n.to_string(), sig9(e.raw), sig9(e.lower), sig9(e.h), e.converged.to_string()]),
    );
    let steps: Vec<f64> = rows.windows(2).map(|w| w[1].1.raw - w[0].1.raw).collect();
    Rendered {
        results: Value::Array(
            rows.iter()
                .map(|(n, e)| json!({"n": n, "diam": json9(e.raw), "lower": json9(e.lower), "h": json9(e.h), "converged": e.converged}))
                .collect(),
        ),
        checks: json!({
            "strictly_increasing": steps.iter().all(|s| *s > 0.0),
            "min_increment": steps.iter().copied().fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s)))).map(json9),
        }),
        tables: vec![Artifact { file: "comb-diameter.csv".into(), contents: table }],
    }
}

// ---------------------------------------------------------------- strip witness

#[derive(Debug, Clone, PartialEq)]
pub struct StripWitnessParams {
    pub x: Vec<f64>,
    pub h: f64,
}

impl Default for StripWitnessParams {
    fn default() -> Self {
        Self { x: vec![5.0, 10.0, 20.0, 40.0], h: 0.01 }
    }
}

pub fn strip_witness(params: &StripWitnessParams) -> Result<Vec<(f64, PoincareBound)>, CliError> {
    params
        .x
        .iter()
        .map(|&x| {
            let d = builtin_domain(DomainName::Strip, &DomainParams { xmax: x, ..DomainParams::default() })?;
            let w = Witness::linear(&d, 1.0, 1.0, params.h)?;
            Ok((x, witness_bound(&w)?))
        })
        .collect()
}

pub fn render_strip_witness(rows: &[(f64, PoincareBound)]) -> Rendered {
    let rel = |x: f64, b: &PoincareBound| b.k_lower / strip_witness_prediction(x) - 1.0;
    let table = csv(
        "X,K_lower,predicted,rel_err,c0,oscillation",
        rows.iter().map(|(x, b)| {
            vec![sig9(*x), sig9(b.k_lower), sig9(strip_witness_prediction(*x)), sig9(rel(*x, b)), sig9(b.c0), sig9(b.oscillation)]
        }),
    );
    Rendered {
        results: Value::Array(
            rows.iter().map(|(x, b)| json!({"X": json9(*x), "bound": b.to_json(), "predicted": json9(strip_witness_prediction(*x))})).collect(),
        ),
        checks: json!({"within_5_percent": rows.iter().all(|(x, b)| rel(*x, b).abs() < 0.05)}),
        tables: vec![Artifact { file: "strip-witness.csv".into(), contents: table }],
    }
}

// ---------------------------------------------------------------- rectangle chain

#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub lengths: Vec<f64>,
    pub p: f64,
    pub eps: f64,
    pub h: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self { lengths: vec![2.0, 4.0, 8.0], p: 3.0, eps: 1e-4, h: 0.01 }
    }
}

pub fn rectangle_chain(params: &ChainParams) -> Result<ChainReport, CliError> {
    Ok(theorem_chain(&params.lengths, params.p, params.eps, params.h, &QuadratureSpec::default())?)
}

pub fn render_chain(report: &ChainReport) -> Rendered {
    Rendered {
        results: Value::Array(
            report
                .rows
                .iter()
                .map(|r| {
                    json!({"L": json9(r.length), "diam": json9(r.diam), "diam_lower": json9(r.diam_lower),
                           "seminorm": json9(r.seminorm), "p": json9(r.p), "eps": json9(r.eps), "min_gap": json9(r.min_gap)})
                })
                .collect(),
        ),
        checks: json!({
            "seminorm_increasing": report.seminorm_increasing,
            "min_growth": json9(report.min_growth),
            "diam_over_seminorm_bounded": report.diam_over_seminorm_bounded,
        }),
        tables: vec![Artifact { file: "rectangle-chain.csv".into(), contents: report.to_csv() }],
    }
}

// ---------------------------------------------------------------- lemma check

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaParams {
    /// Truncations for identity, koebe and strip, in that order.
    pub eps: Vec<f64>,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self { eps: vec![0.1, 0.3, 0.1] }
    }
}

pub fn lemma_check(params: &LemmaParams) -> Result<Vec<LemmaReport>, CliError> {
    if params.eps.len() != 3 {
        return Err(CliError::Usage("lemma-check takes three truncations (identity, koebe, strip)".into()));
    }
    let spec = QuadratureSpec::default();
    [MapName::Identity, MapName::Koebe, MapName::Strip]
        .into_iter()
        .zip(&params.eps)
        .map(|(m, &eps)| Ok(lemma_area_check(&builtin_map(m), eps, &spec)?))
        .collect()
}

pub fn render_lemma(rows: &[LemmaReport]) -> Rendered {
    let table = csv(
        "map,eps,m2,bound,ratio,holder",
        rows.iter().map(|r| vec![r.map.clone(), sig9(r.eps), sig9(r.m2), sig9(r.bound), sig9(r.ratio), sig9(r.holder)]),
    );
    Rendered {
        results: Value::Array(
            rows.iter()
                .map(|r| json!({"map": r.map, "eps": json9(r.eps), "m2": json9(r.m2), "bound": json9(r.bound),
                                "ratio": json9(r.ratio), "holder": json9(r.holder)}))
                .collect(),
        ),
        checks: json!({"ratio_half": rows.iter().all(|r| (r.ratio - 0.5).abs() <= 1e-3), "bound_holds": rows.iter().all(LemmaReport::holds)}),
        tables: vec![Artifact { file: "lemma-check.csv".into(), contents: table }],
    }
}
