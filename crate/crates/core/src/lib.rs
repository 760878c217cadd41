//! Numerical toolkit for conformal maps of the disc, truncated derivative
//! integrals, intrinsic distances on planar domains and Poincaré witnesses.

pub mod conformal;
pub mod geodesic;
pub mod geometry;
pub mod quadrature;
pub mod report;
pub mod integrals;
pub mod poincare;

pub use conformal::{builtin_map, ConformalMap, MapError, MapExpr, MapName, ScMap, C64};
pub use geodesic::GeodesicEstimate;
pub use geometry::{builtin_domain, DomainName, DomainParams, PlanarDomain, Point};
pub use integrals::{DivergenceVerdict, QuadratureSpec, TruncationCurve, VerdictKind};
pub use poincare::{PoincareBound, Witness};
