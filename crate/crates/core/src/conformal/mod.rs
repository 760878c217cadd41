//! Conformal maps of the unit disc: closed-form expression trees with
//! symbolic derivatives, and Schwarz–Christoffel maps onto polygons.

mod expr;
mod sc;

pub use expr::{builtin_map, Expr, MapExpr, MapName};
pub use sc::{sc_solve, sc_solve_with, similarity_misfit, ScMap, ScNormalization, ScOptions, ScWarning};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("unknown map `{0}`")]
    UnknownName(String),
    #[error("singular evaluation at z = {0}")]
    Singular(C64),
    #[error("branch cut violation at z = {0}")]
    BranchViolation(C64),
    #[error("z = {0} lies outside the open unit disc")]
    OutsideDisc(C64),
    #[error("invalid map construction: {0}")]
    Construction(String),
    #[error("quadrature produced a non-finite value at z = {0}")]
    QuadratureNonfinite(C64),
    #[error("parameter problem did not converge (residual {residual:e} > tol {tol:e})")]
    NoConvergence { residual: f64, tol: f64 },
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("malformed map JSON: {0}")]
    Json(String),
}

/// A conformal map of the unit disc with an evaluable derivative.
pub trait ConformalMap: Sync {
    fn eval(&self, z: C64) -> Result<C64, MapError>;
    fn deriv(&self, z: C64) -> Result<C64, MapError>;
    /// Boundary directions (angles) where `|φ'|` blows up or vanishes.
    fn boundary_features(&self) -> Vec<f64>;
    fn name(&self) -> String;
}

/// Real Jacobian `[[u_x, u_y], [v_x, v_y]]` assembled from `φ'` via Cauchy–Riemann.
pub fn jacobian_from_derivative(d: C64) -> [[f64; 2]; 2] {
    [[d.re, -d.im], [d.im, d.re]]
}

pub fn jacobian_det(j: [[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}
