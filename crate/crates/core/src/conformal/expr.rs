use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ConformalMap, MapError, C64};

/// Complex expression tree in the single variable `z`.
///
/// Unary nodes act on their `arg` subtree; `Compose { outer, inner }`
/// substitutes `inner` for `z` in `outer`. `Power` and `Log` use the branch
/// whose argument range is `(cut - 2π, cut]`; `cut = π` is the principal branch.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(C64),
    Z,
    Affine { a: C64, b: C64, arg: Box<Expr> },
    Mobius { a: C64, b: C64, c: C64, d: C64, arg: Box<Expr> },
    Power { exponent: C64, cut: f64, arg: Box<Expr> },
    Log { cut: f64, arg: Box<Expr> },
    Exp(Box<Expr>),
    Recip(Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Compose { outer: Box<Expr>, inner: Box<Expr> },
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Integer exponents need no branch.
fn integer_exponent(c: C64) -> Option<i32> {
    (c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 64.0).then_some(c.re as i32)
}

/// Angle of `w` measured counterclockwise from the cut ray, in `[0, 2π)`.
fn angle_from_cut(w: C64, cut: f64) -> f64 {
    (w.arg() - cut).rem_euclid(TAU)
}

const CUT_TOL: f64 = 1e-14;

fn log_branch(w: C64, cut: f64) -> Option<C64> {
    if w == ZERO {
        return None;
    }
    let psi = angle_from_cut(w, cut);
    if !(CUT_TOL..=TAU - CUT_TOL).contains(&psi) {
        return None;
    }
    // psi in (0, 2π) maps to an argument in (cut - 2π, cut).
    Some(C64::new(w.norm().ln(), cut - TAU + psi))
}

impl Expr {
    pub fn z() -> Self {
        Expr::Z
    }

    pub fn constant(c: C64) -> Self {
        Expr::Const(c)
    }

    pub fn affine(a: C64, b: C64, arg: Expr) -> Self {
        Expr::Affine { a, b, arg: Box::new(arg) }
    }

    pub fn mobius(a: C64, b: C64, c: C64, d: C64, arg: Expr) -> Self {
        Expr::Mobius { a, b, c, d, arg: Box::new(arg) }
    }

    /// Principal-branch power.
    pub fn power(exponent: C64, arg: Expr) -> Self {
        Expr::Power { exponent, cut: PI, arg: Box::new(arg) }
    }

    /// Principal-branch logarithm.
    pub fn log(arg: Expr) -> Self {
        Expr::Log { cut: PI, arg: Box::new(arg) }
    }

    pub fn exp(arg: Expr) -> Self {
        Expr::Exp(Box::new(arg))
    }

    pub fn recip(arg: Expr) -> Self {
        Expr::Recip(Box::new(arg))
    }

    pub fn product(a: Expr, b: Expr) -> Self {
        Expr::Product(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Expr, b: Expr) -> Self {
        Expr::Sum(Box::new(a), Box::new(b))
    }

    pub fn compose(outer: Expr, inner: Expr) -> Self {
        Expr::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Z => 1,
            Expr::Affine { arg, .. }
            | Expr::Mobius { arg, .. }
            | Expr::Power { arg, .. }
            | Expr::Log { arg, .. }
            | Expr::Exp(arg)
            | Expr::Recip(arg) => 1 + arg.depth(),
            Expr::Product(a, b) | Expr::Sum(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Compose { outer, inner } => outer.depth() + inner.depth(),
        }
    }

    /// Evaluates at `z`; errors name the original evaluation point `at`.
    fn eval_inner(&self, z: C64, at: C64, cuts: &mut Option<&mut Vec<(f64, C64)>>) -> Result<C64, MapError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Z => z,
            Expr::Affine { a, b, arg } => a * arg.eval_inner(z, at, cuts)? + b,
            Expr::Mobius { a, b, c, d, arg } => {
                let u = arg.eval_inner(z, at, cuts)?;
                let den = c * u + d;
                if den == ZERO {
                    return Err(MapError::Singular(at));
                }
                (a * u + b) / den
            }
            Expr::Power { exponent, cut, arg } => {
                let u = arg.eval_inner(z, at, cuts)?;
                match integer_exponent(*exponent) {
                    Some(n) => {
                        if u == ZERO && n < 0 {
                            return Err(MapError::Singular(at));
                        }
                        u.powi(n)
                    }
                    None => {
                        if let Some(list) = cuts.as_deref_mut() {
                            list.push((*cut, u));
                        }
                        if u == ZERO {
                            if exponent.re > 0.0 {
                                ZERO
                            } else {
                                return Err(MapError::Singular(at));
                            }
                        } else {
                            let l = log_branch(u, *cut).ok_or(MapError::BranchViolation(at))?;
                            (exponent * l).exp()
                        }
                    }
                }
            }
            Expr::Log { cut, arg } => {
                let u = arg.eval_inner(z, at, cuts)?;
                if let Some(list) = cuts.as_deref_mut() {
                    list.push((*cut, u));
                }
                if u == ZERO {
                    return Err(MapError::Singular(at));
                }
                log_branch(u, *cut).ok_or(MapError::BranchViolation(at))?
            }
            Expr::Exp(arg) => arg.eval_inner(z, at, cuts)?.exp(),
            Expr::Recip(arg) => {
                let u = arg.eval_inner(z, at, cuts)?;
                if u == ZERO {
                    return Err(MapError::Singular(at));
                }
                u.inv()
            }
            Expr::Product(a, b) => a.eval_inner(z, at, cuts)? * b.eval_inner(z, at, cuts)?,
            Expr::Sum(a, b) => a.eval_inner(z, at, cuts)? + b.eval_inner(z, at, cuts)?,
            Expr::Compose { outer, inner } => {
                let w = inner.eval_inner(z, at, cuts)?;
                outer.eval_inner(w, at, cuts)?
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(MapError::Singular(at))
        }
    }

    /// Evaluates the expression at `z` (no disc restriction).
    pub fn eval(&self, z: C64) -> Result<C64, MapError> {
        self.eval_inner(z, z, &mut None)
    }

    /// Symbolic derivative with respect to `z`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(ZERO),
            Expr::Z => Expr::Const(ONE),
            Expr::Affine { a, arg, .. } => mul(Expr::Const(*a), arg.derivative()),
            Expr::Mobius { a, b, c, d, arg } => {
                let det = a * d - b * c;
                let den = Expr::power(C64::new(-2.0, 0.0), Expr::Affine { a: *c, b: *d, arg: arg.clone() });
                mul(mul(Expr::Const(det), den), arg.derivative())
            }
            Expr::Power { exponent, cut, arg } => {
                let e1 = exponent - ONE;
                let head = if e1 == ZERO {
                    Expr::Const(*exponent)
                } else {
                    mul(Expr::Const(*exponent), Expr::Power { exponent: e1, cut: *cut, arg: arg.clone() })
                };
                mul(head, arg.derivative())
            }
            Expr::Log { arg, .. } => mul(Expr::Recip(arg.clone()), arg.derivative()),
            Expr::Exp(arg) => mul(Expr::Exp(arg.clone()), arg.derivative()),
            Expr::Recip(arg) => mul(
                mul(Expr::Const(-ONE), Expr::power(C64::new(-2.0, 0.0), (**arg).clone())),
                arg.derivative(),
            ),
            Expr::Product(a, b) => add(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
            Expr::Sum(a, b) => add(a.derivative(), b.derivative()),
            Expr::Compose { outer, inner } => {
                let douter = match outer.derivative() {
                    Expr::Const(c) => Expr::Const(c),
                    d => Expr::compose(d, (**inner).clone()),
                };
                mul(douter, inner.derivative())
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Z => {}
            Expr::Affine { arg, .. }
            | Expr::Mobius { arg, .. }
            | Expr::Power { arg, .. }
            | Expr::Log { arg, .. }
            | Expr::Exp(arg)
            | Expr::Recip(arg) => arg.visit(f),
            Expr::Product(a, b) | Expr::Sum(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Compose { outer, inner } => {
                outer.visit(f);
                inner.visit(f);
            }
        }
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), _) | (_, Expr::Const(x)) if x == ZERO => Expr::Const(ZERO),
        (Expr::Const(x), e) | (e, Expr::Const(x)) if x == ONE => e,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, b) => Expr::product(a, b),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), e) | (e, Expr::Const(x)) if x == ZERO => e,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) => Expr::sum(a, b),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "({c})"),
            Expr::Z => write!(f, "z"),
            Expr::Affine { a, b, arg } => write!(f, "(({a})*{arg}+({b}))"),
            Expr::Mobius { a, b, c, d, arg } => write!(f, "((({a})*{arg}+({b}))/(({c})*{arg}+({d})))"),
            Expr::Power { exponent, arg, .. } => write!(f, "{arg}^({exponent})"),
            Expr::Log { arg, .. } => write!(f, "log({arg})"),
            Expr::Exp(arg) => write!(f, "exp({arg})"),
            Expr::Recip(arg) => write!(f, "1/{arg}"),
            Expr::Product(a, b) => write!(f, "{a}*{b}"),
            Expr::Sum(a, b) => write!(f, "({a}+{b})"),
            Expr::Compose { outer, inner } => write!(f, "[{outer}]∘[{inner}]"),
        }
    }
}

/// JSON node `{"op": name, "args": [...], "params": {...}}`; complex
/// parameters are `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExprNode {
    op: String,
    #[serde(default)]
    args: Vec<ExprNode>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

fn cjson(c: C64) -> Value {
    serde_json::json!([c.re, c.im])
}

impl From<&Expr> for ExprNode {
    fn from(e: &Expr) -> Self {
        let node = |op: &str, args: Vec<ExprNode>, params: Vec<(&str, Value)>| ExprNode {
            op: op.into(),
            args,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        };
        match e {
            Expr::Const(c) => node("const", vec![], vec![("value", cjson(*c))]),
            Expr::Z => node("z", vec![], vec![]),
            Expr::Affine { a, b, arg } => node("affine", vec![(&**arg).into()], vec![("a", cjson(*a)), ("b", cjson(*b))]),
            Expr::Mobius { a, b, c, d, arg } => node(
                "mobius",
                vec![(&**arg).into()],
                vec![("a", cjson(*a)), ("b", cjson(*b)), ("c", cjson(*c)), ("d", cjson(*d))],
            ),
            Expr::Power { exponent, cut, arg } => node(
                "power",
                vec![(&**arg).into()],
                vec![("exponent", cjson(*exponent)), ("cut", serde_json::json!(cut))],
            ),
            Expr::Log { cut, arg } => node("log", vec![(&**arg).into()], vec![("cut", serde_json::json!(cut))]),
            Expr::Exp(arg) => node("exp", vec![(&**arg).into()], vec![]),
            Expr::Recip(arg) => node("recip", vec![(&**arg).into()], vec![]),
            Expr::Product(a, b) => node("product", vec![(&**a).into(), (&**b).into()], vec![]),
            Expr::Sum(a, b) => node("sum", vec![(&**a).into(), (&**b).into()], vec![]),
            Expr::Compose { outer, inner } => node("compose", vec![(&**outer).into(), (&**inner).into()], vec![]),
        }
    }
}

impl TryFrom<&ExprNode> for Expr {
    type Error = MapError;

    fn try_from(n: &ExprNode) -> Result<Self, MapError> {
        let bad = |m: String| MapError::Json(m);
        let cparam = |k: &str| -> Result<C64, MapError> {
            let v = n.params.get(k).ok_or_else(|| bad(format!("`{}` needs param `{k}`", n.op)))?;
            let pair: [f64; 2] =
                serde_json::from_value(v.clone()).map_err(|e| bad(format!("param `{k}`: {e}")))?;
            Ok(C64::new(pair[0], pair[1]))
        };
        let cut = || -> Result<f64, MapError> {
            match n.params.get("cut") {
                None => Ok(PI),
                Some(v) => v.as_f64().ok_or_else(|| bad("`cut` must be a number".into())),
            }
        };
        let arity = |k: usize| -> Result<Vec<Expr>, MapError> {
            if n.args.len() != k {
                return Err(bad(format!("`{}` takes {k} args, got {}", n.op, n.args.len())));
            }
            n.args.iter().map(Expr::try_from).collect()
        };
        let one = || arity(1).map(|mut v| Box::new(v.remove(0)));
        Ok(match n.op.as_str() {
            "const" => Expr::Const(cparam("value")?),
            "z" => Expr::Z,
            "affine" => Expr::Affine { a: cparam("a")?, b: cparam("b")?, arg: one()? },
            "mobius" => Expr::Mobius { a: cparam("a")?, b: cparam("b")?, c: cparam("c")?, d: cparam("d")?, arg: one()? },
            "power" => Expr::Power { exponent: cparam("exponent")?, cut: cut()?, arg: one()? },
            "log" => Expr::Log { cut: cut()?, arg: one()? },
            "exp" => Expr::Exp(one()?),
            "recip" => Expr::Recip(one()?),
            "product" | "sum" | "compose" => {
                let mut v = arity(2)?;
                let b = Box::new(v.remove(1));
                let a = Box::new(v.remove(0));
                match n.op.as_str() {
                    "product" => Expr::Product(a, b),
                    "sum" => Expr::Sum(a, b),
                    _ => Expr::Compose { outer: a, inner: b },
                }
            }
            other => return Err(bad(format!("unknown op `{other}`"))),
        })
    }
}

/// Closed-form map of the unit disc with its symbolic derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct MapExpr {
    name: String,
    expr: Expr,
    deriv: Expr,
    /// Boundary points where `|φ'|` is unbounded.
    singular: Vec<C64>,
    /// Boundary zeros of `φ'`.
    zeros: Vec<C64>,
}

impl MapExpr {
    /// Builds the derivative tree and rejects expressions whose branch cuts
    /// are crossed inside the disc.
    pub fn new(name: impl Into<String>, expr: Expr) -> Result<Self, MapError> {
        let mut bad_mobius = false;
        expr.visit(&mut |e| {
            if let Expr::Mobius { a, b, c, d, .. } = e {
                if a * d - b * c == ZERO {
                    bad_mobius = true;
                }
            }
        });
        if bad_mobius {
            return Err(MapError::Construction("Möbius node with ad - bc = 0".into()));
        }
        let deriv = expr.derivative();
        let map = Self { name: name.into(), expr, deriv, singular: vec![], zeros: vec![] };
        map.check_cuts()?;
        Ok(map)
    }

    pub fn with_features(mut self, singular: Vec<C64>, zeros: Vec<C64>) -> Self {
        self.singular = singular;
        self.zeros = zeros;
        self
    }

    /// Samples a polar grid of the disc and fails if a cut argument sits on
    /// its cut or jumps across it between neighboring samples.
    fn check_cuts(&self) -> Result<(), MapError> {
        const NR: usize = 24;
        const NA: usize = 96;
        let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(NR);
        for ir in 0..NR {
            let r = 0.02 + (0.995 - 0.02) * ir as f64 / (NR - 1) as f64;
            let mut row = Vec::with_capacity(NA);
            for ia in 0..NA {
                let z = C64::from_polar(r, TAU * ia as f64 / NA as f64);
                let mut args = Vec::new();
                self.expr
                    .eval_inner(z, z, &mut Some(&mut args))
                    .map_err(|e| MapError::Construction(format!("{e} while sampling the disc")))?;
                row.push(args.iter().map(|&(cut, u)| angle_from_cut(u, cut)).collect::<Vec<f64>>());
            }
            rows.push(row);
        }
        let jump = |a: &[f64], b: &[f64]| a.iter().zip(b).any(|(x, y)| (x - y).abs() > PI);
        for ir in 0..NR {
            for ia in 0..NA {
                let here = &rows[ir][ia];
                if jump(here, &rows[ir][(ia + 1) % NA]) || (ir + 1 < NR && jump(here, &rows[ir + 1][ia])) {
                    return Err(MapError::Construction(format!(
                        "branch cut crossed inside the disc near r = {:.3}",
                        0.02 + (0.995 - 0.02) * ir as f64 / (NR - 1) as f64
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.deriv
    }

    pub fn singular_points(&self) -> &[C64] {
        &self.singular
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ExprNode::from(&self.expr)).expect("expression serialization is infallible")
    }

    pub fn from_json(name: impl Into<String>, text: &str) -> Result<Self, MapError> {
        let node: ExprNode = serde_json::from_str(text).map_err(|e| MapError::Json(e.to_string()))?;
        Self::new(name, Expr::try_from(&node)?)
    }

    fn check_disc(z: C64) -> Result<(), MapError> {
        if z.norm() < 1.0 {
            Ok(())
        } else {
            Err(MapError::OutsideDisc(z))
        }
    }
}

impl ConformalMap for MapExpr {
    fn eval(&self, z: C64) -> Result<C64, MapError> {
        Self::check_disc(z)?;
        self.expr.eval(z)
    }

    fn deriv(&self, z: C64) -> Result<C64, MapError> {
        Self::check_disc(z)?;
        self.deriv.eval(z)
    }

    fn boundary_features(&self) -> Vec<f64> {
        self.singular.iter().chain(&self.zeros).map(|p| p.arg()).collect()
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapName {
    Identity,
    Koebe,
    Strip,
}

impl std::str::FromStr for MapName {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, MapError> {
        match s {
            "identity" => Ok(Self::Identity),
            "koebe" => Ok(Self::Koebe),
            "strip" => Ok(Self::Strip),
            other => Err(MapError::UnknownName(other.into())),
        }
    }
}

/// `identity`: z. `koebe`: z/(1-z)², onto ℂ minus (-∞, -1/4].
/// `strip`: log((1+z)/(1-z)), onto |Im w| < π/2.
pub fn builtin_map(name: MapName) -> MapExpr {
    let one = ONE;
    let (label, expr, singular, zeros) = match name {
        MapName::Identity => ("identity", Expr::Z, vec![], vec![]),
        MapName::Koebe => (
            "koebe",
            Expr::product(Expr::Z, Expr::power(C64::new(-2.0, 0.0), Expr::affine(-one, one, Expr::Z))),
            vec![one],
            vec![-one],
        ),
        MapName::Strip => ("strip", Expr::log(Expr::mobius(one, one, -one, one, Expr::Z)), vec![one, -one], vec![]),
    };
    MapExpr::new(label, expr)
        .expect("builtin maps are valid")
        .with_features(singular, zeros)
}
