//! Benchmark fixtures shared by the criterion benches.

use conflab_core::geometry::{PlanarDomain, Point};

/// Convex hexagon used by the Schwarz–Christoffel benchmarks.
pub fn hexagon() -> PlanarDomain {
    let v = [(0.0, 0.0), (2.0, -0.3), (3.1, 0.8), (2.4, 2.2), (0.9, 2.6), (-0.6, 1.1)];
    PlanarDomain::polygon("hexagon", v.iter().map(|&(x, y)| Point::new(x, y)).collect()).expect("valid hexagon")
}
