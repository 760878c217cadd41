//! `conflab` command-line front end.

pub mod config;
pub mod error;
pub mod experiments;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use conflab_core::conformal::{builtin_map, sc_solve_with, ConformalMap, MapName, ScNormalization, ScOptions};
use conflab_core::geodesic::geodesic_diameter;
use conflab_core::geometry::{builtin_domain, DomainName, DomainParams, PlanarDomain, Point};
use conflab_core::integrals::{classify, sobolev_seminorm, truncation_scan, QuadratureSpec};
use conflab_core::poincare::{rectangle_map, witness_bound, Witness};
use conflab_core::report::json9;
use serde_json::{json, Map, Value};

use config::{parse_list, Config, Resolver};
use error::CliError;
use experiments::{Artifact, Rendered};

pub const VERSION: &str = concat!("conflab ", env!("CARGO_PKG_VERSION"));

/// Seed recorded in every summary. No command samples randomly, so it only
/// documents that runs are reproducible.
pub const SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "conflab", version, about = "Conformal maps, Brennan integrals and intrinsic geometry experiments")]
pub struct Cli {
    /// Output directory for JSON and CSV artifacts.
    #[arg(long, global = true, default_value = "./out")]
    pub out: PathBuf,
    /// JSON object of parameter defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Truncation scan and convergence verdict of the Brennan integral.
    Brennan {
        #[arg(long)]
        map: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Grid estimate of the intrinsic diameter of a domain.
    GeodesicDiam {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        landmarks: Option<usize>,
    },
    /// Truncated Sobolev seminorm of a map.
    SobolevNorm {
        /// Builtin map name, or `rectangle` for the SC map onto `[0, L] × [0, 1]`.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        length: Option<f64>,
    },
    /// Lower bound for the Poincaré constant from a witness function.
    PoincareWitness {
        #[command(flatten)]
        domain: DomainArgs,
        /// `linear` or `distance`.
        #[arg(long)]
        witness: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        /// Source point `x,y` of the distance witness.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Solve the Schwarz–Christoffel parameter problem for a polygon.
    ScSolve {
        #[command(flatten)]
        domain: DomainArgs,
        /// Polygon vertices `x,y;x,y;...`, counterclockwise. Overrides `--domain`.
        #[arg(long, allow_hyphen_values = true)]
        vertices: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// `fixed` or `centered`.
        #[arg(long)]
        normalization: Option<String>,
        #[arg(long)]
        shift: Option<usize>,
    },
    /// Run a registered experiment.
    Experiment {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(experiments::NAMES))]
        name: String,
        #[command(flatten)]
        flags: ExperimentFlags,
    },
    /// Describe a builtin domain.
    DomainInfo {
        #[command(flatten)]
        domain: DomainArgs,
    },
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Number of removed circles (comb).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
}

/// Experiment flags; list-valued ones take comma-separated numbers.
#[derive(Debug, Default, Args)]
pub struct ExperimentFlags {
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub doublings: Option<usize>,
    #[arg(long)]
    pub vertices_per_doubling: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub landmarks: Option<usize>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{}", summary.display());
            0
        }
        Err(e) => {
            eprintln!("conflab: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the path of its JSON summary.
pub fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let mut r = Resolver::new(&config);
    let (name, rendered) = match &cli.command {
        Command::Brennan { map, s, eps0, levels } => ("brennan".to_string(), brennan(&mut r, map, *s, *eps0, *levels)?),
        Command::GeodesicDiam { domain, h, landmarks } => {
            let d = resolve_domain(&mut r, domain, "disc")?;
            let h = r.f64("h", *h, 0.01)?;
            let landmarks = r.usize("landmarks", *landmarks, 4)?;
            let est = geodesic_diameter(&d, h, landmarks)?;
            let results = json!({
                "domain": d.label, "raw": json9(est.raw), "lower": json9(est.lower), "h": json9(est.h),
                "stencil": est.stencil, "converged": est.converged,
            });
            ("geodesic-diam".into(), Rendered { results, checks: json!({}), tables: vec![] })
        }
        Command::SobolevNorm { map, p, eps, length } => {
            let name = r.string("map", map.clone(), "koebe")?;
            let p = r.f64("p", *p, 2.0)?;
            let eps = r.f64("eps", *eps, 0.01)?;
            let spec = QuadratureSpec::default();
            let value = if name == "rectangle" {
                let length = r.f64("length", *length, 4.0)?;
                sobolev_seminorm(&rectangle_map(length, 1e-11)?, p, eps, &spec)?
            } else {
                sobolev_seminorm(&named_map(&name)?, p, eps, &spec)?
            };
            let results = json!({"map": name, "p": json9(p), "eps": json9(eps), "seminorm": json9(value)});
            ("sobolev-norm".into(), Rendered { results, checks: json!({}), tables: vec![] })
        }
        Command::PoincareWitness { domain, witness, a, b, x0, h } => {
            let d = resolve_domain(&mut r, domain, "strip")?;
            let kind = r.string("witness", witness.clone(), "linear")?;
            let h = r.f64("h", *h, 0.01)?;
            let w = match kind.as_str() {
                "linear" => {
                    let a = r.f64("a", *a, 1.0)?;
                    let b = r.f64("b", *b, 1.0)?;
                    Witness::linear(&d, a, b, h)?
                }
                "distance" => {
                    let pts = r.points("x0", x0.as_deref())?;
                    let p = match pts.as_deref() {
                        Some([p]) => Point::new(p[0], p[1]),
                        Some(_) => return Err(CliError::Usage("`x0` takes one point `x,y`".into())),
                        None => return Err(CliError::Usage("the distance witness needs `--x0 x,y`".into())),
                    };
                    Witness::distance(&d, p, h)?
                }
                other => return Err(CliError::Usage(format!("unknown witness `{other}` (linear, distance)"))),
            };
            let bound = witness_bound(&w)?;
            let results = json!({"domain": d.label, "bound": bound.to_json(), "grad_sup": json9(w.grad_sup), "cells": w.mask.count()});
            ("poincare-witness".into(), Rendered { results, checks: json!({}), tables: vec![] })
        }
        Command::ScSolve { domain, vertices, tol, normalization, shift } => {
            let poly = match r.points("vertices", vertices.as_deref())? {
                Some(pts) => PlanarDomain::polygon("polygon", pts.iter().map(|p| Point::new(p[0], p[1])).collect())?,
                None => resolve_domain(&mut r, domain, "rectangle")?,
            };
            let tol = r.f64("tol", *tol, 1e-10)?;
            let normalization = match r.string("normalization", normalization.clone(), "fixed")?.as_str() {
                "fixed" => ScNormalization::FixedTriple { shift: r.usize("shift", *shift, 0)? },
                "centered" => ScNormalization::Centered { center: None },
                other => return Err(CliError::Usage(format!("unknown normalization `{other}` (fixed, centered)"))),
            };
            let map = sc_solve_with(&poly, &ScOptions { tol, normalization, ..ScOptions::default() })?;
            let results = json!({
                "vertices": map.vertices.iter().map(|w| [json9(w.re), json9(w.im)]).collect::<Vec<_>>(),
                "prevertex_angles": map.theta.iter().map(|t| json9(*t)).collect::<Vec<_>>(),
                "beta": map.beta.iter().map(|b| json9(*b)).collect::<Vec<_>>(),
                "C": [json9(map.c.re), json9(map.c.im)],
                "A": [json9(map.a.re), json9(map.a.im)],
                "residual": json9(map.residual),
                "iterations": map.iterations,
                "vertex_error": json9(map.vertex_error()?),
                "min_gap": json9(map.min_gap()),
                "warnings": map.warnings.len(),
            });
            let tables = vec![Artifact { file: "sc-map.json".into(), contents: format!("{}\n", map.to_json()) }];
            ("sc-solve".into(), Rendered { results, checks: json!({}), tables })
        }
        Command::Experiment { name, flags } => (name.clone(), experiment(&mut r, name, flags)?),
        Command::DomainInfo { domain } => {
            let d = resolve_domain(&mut r, domain, "disc")?;
            let (lo, hi) = d.bounding_box();
            let results = json!({
                "label": d.label,
                "outer_vertices": d.outer.len(),
                "holes": d.holes.len(),
                "slits": d.slits.len(),
                "analytic_area": json9(d.analytic_area()),
                "polygon_area": json9(d.polygon_area()),
                "bounding_box": [[json9(lo.x), json9(lo.y)], [json9(hi.x), json9(hi.y)]],
            });
            let tables = vec![Artifact { file: "domain.json".into(), contents: format!("{}\n", d.to_json()) }];
            ("domain-info".into(), Rendered { results, checks: json!({}), tables })
        }
    };
    write_artifacts(&cli.out, &name, r.finish(), rendered)
}

fn write_artifacts(out: &Path, name: &str, parameters: Map<String, Value>, rendered: Rendered) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    for t in &rendered.tables {
        std::fs::write(out.join(&t.file), &t.contents)?;
        outputs.push(Value::String(t.file.clone()));
    }
    let summary = json!({
        "name": name,
        "version": VERSION,
        "seed": SEED,
        "parameters": parameters,
        "results": rendered.results,
        "checks": rendered.checks,
        "outputs": outputs,
    });
    let path = out.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn named_map(name: &str) -> Result<conflab_core::conformal::MapExpr, CliError> {
    Ok(builtin_map(name.parse::<MapName>()?))
}

fn resolve_domain(r: &mut Resolver, args: &DomainArgs, default: &str) -> Result<PlanarDomain, CliError> {
    let name: DomainName = r.string("domain", args.domain.clone(), default)?.parse()?;
    let base = DomainParams::default();
    let mut p = base;
    match name {
        DomainName::Disc | DomainName::SlitDisc => {}
        DomainName::Strip => p.xmax = r.f64("xmax", args.xmax, base.xmax)?,
        DomainName::Cusp => {
            p.alpha = r.f64("alpha", args.alpha, base.alpha)?;
            p.xmax = r.f64("xmax", args.xmax, base.xmax)?;
        }
        DomainName::Comb => {
            p.n_slits = r.usize("n", args.n, base.n_slits)?;
            p.r = r.f64("r", args.r, base.r)?;
        }
        DomainName::Rectangle => p.length = r.f64("length", args.length, base.length)?,
    }
    Ok(builtin_domain(name, &p)?)
}

fn brennan(
    r: &mut Resolver,
    map: &Option<String>,
    s: Option<f64>,
    eps0: Option<f64>,
    levels: Option<usize>,
) -> Result<Rendered, CliError> {
    let name = r.string("map", map.clone(), "koebe")?;
    let s = r.f64("s", s, 0.5)?;
    let eps0 = r.f64("eps0", eps0, 0.125)?;
    let levels = r.usize("levels", levels, 10)?;
    let m = named_map(&name)?;
    let curve = truncation_scan(&m as &dyn ConformalMap, s, eps0, levels, &QuadratureSpec::default())?;
    let verdict = classify(&curve)?;
    Ok(Rendered {
        results: json!({"map": name, "s": json9(s), "verdict": verdict.to_json()}),
        checks: json!({}),
        tables: vec![Artifact { file: "brennan-curve.csv".into(), contents: curve.to_csv() }],
    })
}

fn num(key: &str, flag: &Option<String>) -> Result<Option<f64>, CliError> {
    flag.as_deref()
        .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{t}` as a number"))))
        .transpose()
}

/// Resolves an experiment's parameters and runs it.
pub fn experiment(r: &mut Resolver, name: &str, f: &ExperimentFlags) -> Result<Rendered, CliError> {
    use experiments::*;
    // Validate list flags early so a malformed list is a usage error even
    // when the experiment ignores it.
    for (key, flag) in [("s", &f.s), ("alpha", &f.alpha), ("n", &f.n), ("x", &f.x), ("lengths", &f.lengths), ("eps", &f.eps)] {
        if let Some(text) = flag {
            parse_list(key, text)?;
        }
    }
    match name {
        "koebe-range" | "strip-range" => {
            let (map, d) = if name == "koebe-range" { (MapName::Koebe, RangeParams::koebe()) } else { (MapName::Strip, RangeParams::strip()) };
            let params = RangeParams {
                s: r.list("s", f.s.as_deref(), &d.s)?,
                eps0: r.f64("eps0", f.eps0, d.eps0)?,
                levels: r.usize("levels", f.levels, d.levels)?,
            };
            Ok(render_range(name, &brennan_range(map, &params)?))
        }
        "cusp-area" => {
            let d = CuspParams::default();
            let params = CuspParams {
                alpha: r.list("alpha", f.alpha.as_deref(), &d.alpha)?,
                doublings: r.usize("doublings", f.doublings, d.doublings)?,
                vertices_per_doubling: r.usize("vertices_per_doubling", f.vertices_per_doubling, d.vertices_per_doubling)?,
            };
            Ok(render_cusp(&cusp_area(&params)?))
        }
        "comb-diameter" => {
            let d = CombParams::default();
            let params = CombParams {
                n: r.list("n", f.n.as_deref(), &d.n)?,
                r: r.f64("r", f.r, d.r)?,
                h: r.f64("h", f.h, d.h)?,
                landmarks: r.usize("landmarks", f.landmarks, d.landmarks)?,
            };
            Ok(render_comb(&comb_diameter(&params)?))
        }
        "strip-witness" => {
            let d = StripWitnessParams::default();
            let params = StripWitnessParams { x: r.list("x", f.x.as_deref(), &d.x)?, h: r.f64("h", f.h, d.h)? };
            Ok(render_strip_witness(&strip_witness(&params)?))
        }
        "rectangle-chain" => {
            let d = ChainParams::default();
            let params = ChainParams {
                lengths: r.list("lengths", f.lengths.as_deref(), &d.lengths)?,
                p: r.f64("p", f.p, d.p)?,
                eps: r.f64("eps", num("eps", &f.eps)?, d.eps)?,
                h: r.f64("h", f.h, d.h)?,
            };
            Ok(render_chain(&rectangle_chain(&params)?))
        }
        "lemma-check" => {
            let d = LemmaParams::default();
            let params = LemmaParams { eps: r.list("eps", f.eps.as_deref(), &d.eps)? };
            Ok(render_lemma(&lemma_check(&params)?))
        }
        other => Err(CliError::Usage(format!("unknown experiment `{other}`"))),
    }
}
