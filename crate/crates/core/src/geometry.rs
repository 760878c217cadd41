//! Planar domains: exact polygonal representation, membership, segment
//! visibility and cell-center rasterization.
//!
//! Curved boundaries (circles, the cusp curve `y = x^-alpha`) are replaced by
//! polygonal chains at construction time. Unbounded domains are always cut at
//! a finite `x_max`; the analytic shape is kept alongside so that closed-form
//! areas remain available for the untruncated set.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Polygon window used when an unbounded domain is requested with `x_max = inf`.
pub const UNBOUNDED_WINDOW: f64 = 1000.0;

/// Default cell budget for [`rasterize`].
pub const DEFAULT_CELL_BUDGET: usize = 20_000_000;

/// Tolerance used by [`PlanarDomain::contains`] for "on a chain" tests.
pub const CONTAINS_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("polygonalization degeneracy: {0}")]
    Degenerate(String),
    #[error("resolution overflow: {cells} cells exceed the budget of {budget}")]
    ResolutionOverflow { cells: usize, budget: usize },
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("malformed domain JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub xmax: f64,
}

/// Analytic description a builtin domain was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Shape {
    #[default]
    Polygon,
    Disc,
    SlitDisc,
    Rectangle { length: f64 },
    /// `1 < x < xmax, 0 < y < 1`; `xmax` may be infinite.
    Strip { xmax: f64 },
    /// `1 < x < xmax, 0 < y < x^-alpha`; `xmax` may be infinite.
    Cusp { alpha: f64, xmax: f64 },
    Comb { n_slits: usize, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarDomain {
    pub label: String,
    /// Counterclockwise closed chain (last vertex is not repeated).
    pub outer: Vec<Point>,
    /// Clockwise closed chains.
    #[serde(default)]
    pub holes: Vec<Vec<Point>>,
    /// Open chains of removed points.
    #[serde(default)]
    pub slits: Vec<Vec<Point>>,
    pub truncation: Option<Truncation>,
    #[serde(skip)]
    pub shape: Shape,
}

/// Named builtin domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainName {
    Disc,
    Strip,
    Cusp,
    Comb,
    SlitDisc,
    Rectangle,
}

impl std::str::FromStr for DomainName {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "disc" => Self::Disc,
            "strip" => Self::Strip,
            "cusp" => Self::Cusp,
            "comb" => Self::Comb,
            "slit_disc" | "slit-disc" => Self::SlitDisc,
            "rectangle" => Self::Rectangle,
            other => return Err(GeometryError::UnknownDomain(other.to_string())),
        })
    }
}

/// Parameters for [`builtin_domain`]. Fields irrelevant to the chosen domain are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainParams {
    pub alpha: f64,
    pub xmax: f64,
    pub n_slits: usize,
    pub r: f64,
    pub length: f64,
    /// Vertices per full circle.
    pub circle_vertices: usize,
    /// Cusp curve vertices per doubling of `x`.
    pub cusp_vertices_per_doubling: usize,
}

impl Default for DomainParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            xmax: 10.0,
            n_slits: 3,
            r: 0.1,
            length: 4.0,
            circle_vertices: 64,
            cusp_vertices_per_doubling: 32,
        }
    }
}

/// Regular `n`-gon inscribed in `|z| = radius`; vertices on the axes are exact.
fn circle(radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            if (4 * k) % n == 0 {
                let (c, s) = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][4 * k / n];
                Point::new(radius * c, radius * s)
            } else {
                Point::polar(radius, 2.0 * PI * k as f64 / n as f64)
            }
        })
        .collect()
}

/// Arc of `|z| = radius` from angle `a0` to `a1` (counterclockwise, `a1 > a0`).
fn arc(radius: f64, a0: f64, a1: f64, per_circle: usize) -> Vec<Point> {
    let segs = ((per_circle as f64 * (a1 - a0) / (2.0 * PI)).ceil() as usize).max(2);
    (0..=segs)
        .map(|k| Point::polar(radius, a0 + (a1 - a0) * k as f64 / segs as f64))
        .collect()
}

/// Removed circle `S^r_m` of the comb domain: radius `1 + 1/m`, with the gap
/// on the right (`x >= 1 - r`) for even `m` and on the left (`x <= r - 1`) for odd `m`.
fn comb_slit(m: usize, r: f64, per_circle: usize) -> Vec<Point> {
    let rho = 1.0 + 1.0 / m as f64;
    if m.is_multiple_of(2) {
        let t0 = ((1.0 - r) / rho).acos();
        arc(rho, t0, 2.0 * PI - t0, per_circle)
    } else {
        let t0 = ((r - 1.0) / rho).acos();
        arc(rho, -t0, t0, per_circle)
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), GeometryError> {
    if cond {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter(msg()))
    }
}

/// Builds one of the named domains.
pub fn builtin_domain(name: DomainName, params: &DomainParams) -> Result<PlanarDomain, GeometryError> {
    check(params.circle_vertices >= 8, || {
        format!("circle_vertices must be at least 8, got {}", params.circle_vertices)
    })?;
    let truncated = |xmax: f64| -> Result<f64, GeometryError> {
        check(xmax > 1.0 && !xmax.is_nan(), || format!("x_max must exceed 1, got {xmax}"))?;
        Ok(if xmax.is_finite() { xmax } else { UNBOUNDED_WINDOW })
    };
    let nv = params.circle_vertices;
    let domain = match name {
        DomainName::Disc => PlanarDomain {
            label: "disc".into(),
            outer: circle(1.0, nv),
            holes: vec![],
            slits: vec![],
            truncation: None,
            shape: Shape::Disc,
        },
        DomainName::SlitDisc => PlanarDomain {
            label: "slit_disc".into(),
            outer: circle(1.0, nv.next_multiple_of(2)),
            holes: vec![],
            slits: vec![vec![Point::new(-1.0, 0.0), Point::new(-0.25, 0.0)]],
            truncation: None,
            shape: Shape::SlitDisc,
        },
        DomainName::Rectangle => {
            let l = params.length;
            check(l > 0.0 && l.is_finite(), || format!("rectangle length must be positive, got {l}"))?;
            PlanarDomain {
                label: format!("rectangle(L={l})"),
                outer: vec![
                    Point::new(0.0, 0.0),
                    Point::new(l, 0.0),
                    Point::new(l, 1.0),
                    Point::new(0.0, 1.0),
                ],
                holes: vec![],
                slits: vec![],
                truncation: None,
                shape: Shape::Rectangle { length: l },
            }
        }
        DomainName::Strip => {
            let x = truncated(params.xmax)?;
            PlanarDomain {
                label: format!("strip(X={})", params.xmax),
                outer: vec![
                    Point::new(1.0, 0.0),
                    Point::new(x, 0.0),
                    Point::new(x, 1.0),
                    Point::new(1.0, 1.0),
                ],
                holes: vec![],
                slits: vec![],
                truncation: Some(Truncation { xmax: x }),
                shape: Shape::Strip { xmax: params.xmax },
            }
        }
        DomainName::Cusp => {
            let alpha = params.alpha;
            check(alpha > 1.0 && alpha.is_finite(), || format!("cusp exponent must exceed 1, got {alpha}"))?;
            check(params.cusp_vertices_per_doubling >= 1, || "cusp vertex density must be positive".into())?;
            let x = truncated(params.xmax)?;
            let m = ((params.cusp_vertices_per_doubling as f64 * x.log2()).ceil() as usize).max(2);
            let mut outer = vec![Point::new(1.0, 0.0), Point::new(x, 0.0)];
            outer.extend((0..=m).rev().map(|j| {
                let xj = if j == m { x } else { x.powf(j as f64 / m as f64) };
                Point::new(xj, xj.powf(-alpha))
            }));
            PlanarDomain {
                label: format!("cusp(alpha={alpha},X={})", params.xmax),
                outer,
                holes: vec![],
                slits: vec![],
                truncation: Some(Truncation { xmax: x }),
                shape: Shape::Cusp { alpha, xmax: params.xmax },
            }
        }
        DomainName::Comb => {
            let r = params.r;
            check(r > 0.0 && r < 0.25, || format!("comb gap parameter must lie in (0, 1/4), got {r}"))?;
            check(params.n_slits >= 1, || "comb needs at least one slit circle".into())?;
            let mut hole = circle(1.0, nv);
            hole.reverse();
            PlanarDomain {
                label: format!("comb(n={},r={r})", params.n_slits),
                outer: circle(2.0, nv),
                holes: vec![hole],
                slits: (2..params.n_slits + 2).map(|m| comb_slit(m, r, nv)).collect(),
                truncation: None,
                shape: Shape::Comb { n_slits: params.n_slits, r },
            }
        }
    };
    domain.validate()?;
    Ok(domain)
}

/// Orientation sign of `c` relative to the directed line `a -> b` (exact).
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

fn between(a: Point, b: Point, p: Point) -> bool {
    // p is collinear with a, b: is it within the closed box of [a, b]?
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn strictly_between(a: Point, b: Point, p: Point) -> bool {
    between(a, b, p) && p != a && p != b
}

/// Does the open segment `(a, b)` meet the closed segment `[p, q]`?
pub fn open_segment_hits(a: Point, b: Point, p: Point, q: Point) -> bool {
    let o1 = orient(a, b, p);
    let o2 = orient(a, b, q);
    let o3 = orient(p, q, a);
    let o4 = orient(p, q, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && strictly_between(a, b, p))
        || (o2 == 0.0 && strictly_between(a, b, q))
        || (o3 == 0.0 && o4 != 0.0 && between(p, q, a) && o1 * o2 <= 0.0)
        || (o4 == 0.0 && o3 != 0.0 && between(p, q, b) && o1 * o2 <= 0.0)
        || (o3 == 0.0 && o4 == 0.0 && (between(p, q, a) || between(p, q, b)))
}

/// Do the closed segments `[a, b]` and `[p, q]` meet?
pub fn segments_touch(a: Point, b: Point, p: Point, q: Point) -> bool {
    let o1 = orient(a, b, p);
    let o2 = orient(a, b, q);
    let o3 = orient(p, q, a);
    let o4 = orient(p, q, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && between(a, b, p))
        || (o2 == 0.0 && between(a, b, q))
        || (o3 == 0.0 && between(p, q, a))
        || (o4 == 0.0 && between(p, q, b))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Signed shoelace area (positive for counterclockwise rings).
pub fn shoelace(ring: &[Point]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Even-odd crossing test for a closed ring (half-open edge rule).
fn ring_crossings(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn ring_segments(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

fn chain_segments(chain: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    chain.windows(2).map(|w| (w[0], w[1]))
}

impl PlanarDomain {
    /// Closed polygon with no holes or slits.
    pub fn polygon(label: impl Into<String>, outer: Vec<Point>) -> Result<Self, GeometryError> {
        let d = Self {
            label: label.into(),
            outer,
            holes: vec![],
            slits: vec![],
            truncation: None,
            shape: Shape::Polygon,
        };
        d.validate()?;
        Ok(d)
    }

    /// Every boundary segment: outer ring, hole rings and slit chains.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        ring_segments(&self.outer)
            .chain(self.holes.iter().flat_map(|h| ring_segments(h)))
            .chain(self.slits.iter().flat_map(|s| chain_segments(s)))
    }

    pub fn slit_segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.slits.iter().flat_map(|s| chain_segments(s))
    }

    fn ring_segments_all(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        ring_segments(&self.outer).chain(self.holes.iter().flat_map(|h| ring_segments(h)))
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.outer {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Checks the structural invariants: finite coordinates, simple outer
    /// ring, disjoint holes strictly inside, slits inside the closed solid region.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let all = self
            .outer
            .iter()
            .chain(self.holes.iter().flatten())
            .chain(self.slits.iter().flatten());
        for p in all {
            if !p.is_finite() {
                return Err(GeometryError::InvalidParameter(format!("non-finite vertex {p}")));
            }
        }
        if self.outer.len() < 3 {
            return Err(GeometryError::Degenerate("outer ring needs at least 3 vertices".into()));
        }
        if shoelace(&self.outer) <= 0.0 {
            return Err(GeometryError::Degenerate("outer ring must be counterclockwise".into()));
        }
        for h in &self.holes {
            if h.len() < 3 || shoelace(h) >= 0.0 {
                return Err(GeometryError::Degenerate("holes must be clockwise rings".into()));
            }
        }
        // Ring simplicity and mutual disjointness of all rings.
        let rings: Vec<&[Point]> = std::iter::once(self.outer.as_slice())
            .chain(self.holes.iter().map(|h| h.as_slice()))
            .collect();
        for (ri, ra) in rings.iter().enumerate() {
            let na = ra.len();
            for i in 0..na {
                let (a, b) = (ra[i], ra[(i + 1) % na]);
                for (rj, rb) in rings.iter().enumerate().skip(ri) {
                    let nb = rb.len();
                    for j in 0..nb {
                        if ri == rj && (j <= i || j == i + 1 || (i == 0 && j == na - 1)) {
                            continue;
                        }
                        let (p, q) = (rb[j], rb[(j + 1) % nb]);
                        if segments_touch(a, b, p, q) {
                            return Err(GeometryError::Degenerate(format!(
                                "rings intersect near {a} -- {b}"
                            )));
                        }
                    }
                }
            }
        }
        for h in &self.holes {
            if !ring_crossings(&self.outer, h[0]) {
                return Err(GeometryError::Degenerate("hole lies outside the outer ring".into()));
            }
            for g in &self.holes {
                if !std::ptr::eq(g, h) && ring_crossings(g, h[0]) {
                    return Err(GeometryError::Degenerate("nested holes".into()));
                }
            }
        }
        // Slits: every segment midpoint in the closed solid region, no proper crossing
        // of rings, and slit chains pairwise disjoint.
        for (si, s) in self.slits.iter().enumerate() {
            if s.len() < 2 {
                return Err(GeometryError::Degenerate("slit chains need 2 vertices".into()));
            }
            for (a, b) in chain_segments(s) {
                let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                if !self.in_solid_region(mid) {
                    return Err(GeometryError::Degenerate(format!("slit leaves the domain near {mid}")));
                }
                for (p, q) in self.ring_segments_all() {
                    let o1 = orient(a, b, p);
                    let o2 = orient(a, b, q);
                    let o3 = orient(p, q, a);
                    let o4 = orient(p, q, b);
                    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                        return Err(GeometryError::Degenerate(format!("slit crosses a ring near {mid}")));
                    }
                }
                for t in self.slits.iter().skip(si + 1) {
                    for (p, q) in chain_segments(t) {
                        if segments_touch(a, b, p, q) {
                            return Err(GeometryError::Degenerate(format!(
                                "slit chains intersect near {mid}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Inside the outer ring and outside every hole (ignores slits and the boundary test).
    fn in_solid_region(&self, p: Point) -> bool {
        ring_crossings(&self.outer, p) && !self.holes.iter().any(|h| ring_crossings(h, p))
    }

    /// Distance from `p` to the nearest ring (outer or hole) segment.
    pub fn ring_distance(&self, p: Point) -> f64 {
        self.ring_segments_all()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn slit_distance(&self, p: Point) -> f64 {
        self.slit_segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Open-set membership: strictly inside the outer ring, strictly outside the
    /// holes, and off every slit. Boundary points are outside.
    pub fn contains(&self, p: Point) -> bool {
        self.contains_within(p, CONTAINS_SNAP)
    }

    /// Membership with slit snap tolerance `slit_snap`.
    pub fn contains_within(&self, p: Point, slit_snap: f64) -> bool {
        p.is_finite()
            && self.in_solid_region(p)
            && self.ring_distance(p) > CONTAINS_SNAP
            && self.slit_distance(p) > slit_snap
    }

    /// True iff the open segment `(a, b)` meets no ring or slit segment.
    pub fn segment_clear(&self, a: Point, b: Point) -> bool {
        !self.segments().any(|(p, q)| open_segment_hits(a, b, p, q))
    }

    /// Closed-form area of the set this domain stands for.
    ///
    /// Truncated builtins report the area of the truncation; builtins built
    /// with `x_max = inf` report the area of the unbounded set.
    pub fn analytic_area(&self) -> f64 {
        match self.shape {
            Shape::Disc | Shape::SlitDisc => PI,
            Shape::Rectangle { length } => length,
            Shape::Strip { xmax } => xmax - 1.0,
            Shape::Cusp { alpha, xmax } => cusp_area(alpha, xmax),
            Shape::Comb { .. } => 3.0 * PI,
            Shape::Polygon => self.polygon_area(),
        }
    }

    /// Shoelace area of the polygonal representation (outer minus holes).
    pub fn polygon_area(&self) -> f64 {
        shoelace(&self.outer) + self.holes.iter().map(|h| shoelace(h)).sum::<f64>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let d: Self = serde_json::from_str(text).map_err(|e| GeometryError::Json(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }
}

/// `m_2` of the cusp `1 < x < xmax, 0 < y < x^-alpha`.
pub fn cusp_area(alpha: f64, xmax: f64) -> f64 {
    if xmax.is_infinite() {
        1.0 / (alpha - 1.0)
    } else {
        (1.0 - xmax.powf(1.0 - alpha)) / (alpha - 1.0)
    }
}

/// Cell-center occupancy mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
}

impl GridMask {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        self.center(i, j)
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.h * self.h * self.count() as f64
    }

    /// Cell whose square contains `p`, if within the grid.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Nearest inside cell center to `p` (ties to the lowest index).
    pub fn nearest_inside(&self, p: Point) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        let (ci, cj) = match self.cell_of(p) {
            Some(c) => (c.0 as i64, c.1 as i64),
            None => (
                ((p.x - self.origin.x) / self.h).clamp(0.0, self.nx as f64 - 1.0) as i64,
                ((p.y - self.origin.y) / self.h).clamp(0.0, self.ny as f64 - 1.0) as i64,
            ),
        };
        // Expanding square rings; stop once the ring is farther than the best hit.
        for rad in 0..(self.nx.max(self.ny) as i64) {
            if let Some((d, _)) = best {
                if (rad as f64 - 1.0) * self.h > d {
                    break;
                }
            }
            for j in (cj - rad)..=(cj + rad) {
                for i in (ci - rad)..=(ci + rad) {
                    if (i - ci).abs() != rad && (j - cj).abs() != rad {
                        continue;
                    }
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let idx = self.index(i as usize, j as usize);
                    if !self.inside[idx] {
                        continue;
                    }
                    let d = self.center_of(idx).dist(p);
                    match best {
                        Some((bd, bi)) if d > bd || (d == bd && idx > bi) => {}
                        _ => best = Some((d, idx)),
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Rasterizes with the default cell budget.
pub fn rasterize(domain: &PlanarDomain, h: f64) -> Result<GridMask, GeometryError> {
    rasterize_with_budget(domain, h, DEFAULT_CELL_BUDGET)
}

/// Cell-center mask of `domain` at step `h`. Cells whose center lies within
/// `h / 4` of a slit are marked outside.
pub fn rasterize_with_budget(domain: &PlanarDomain, h: f64, budget: usize) -> Result<GridMask, GeometryError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("cell size must be positive, got {h}")));
    }
    let (lo, hi) = domain.bounding_box();
    let nx = ((hi.x - lo.x) / h).ceil().max(1.0);
    let ny = ((hi.y - lo.y) / h).ceil().max(1.0);
    let cells = nx * ny;
    if !cells.is_finite() || cells > budget as f64 {
        return Err(GeometryError::ResolutionOverflow {
            cells: if cells.is_finite() { cells as usize } else { usize::MAX },
            budget,
        });
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let mut mask = GridMask { origin: lo, h, nx, ny, inside: vec![false; nx * ny] };

    // Scanline fill by even-odd parity over all rings.
    let edges: Vec<(Point, Point)> = domain.ring_segments_all().collect();
    let mut xs: Vec<f64> = Vec::new();
    for j in 0..ny {
        let y = lo.y + (j as f64 + 0.5) * h;
        xs.clear();
        for &(a, b) in &edges {
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for pair in xs.chunks_exact(2) {
            // centers with pair[0] < x < pair[1]
            let i0 = ((pair[0] - lo.x) / h - 0.5).floor() as i64 + 1;
            let i1 = ((pair[1] - lo.x) / h - 0.5).ceil() as i64 - 1;
            for i in i0.max(0)..=i1.min(nx as i64 - 1) {
                let x = lo.x + (i as f64 + 0.5) * h;
                if x > pair[0] && x < pair[1] {
                    mask.inside[j * nx + i as usize] = true;
                }
            }
        }
    }

    let snap = 0.25 * h;
    for (a, b) in domain.slit_segments() {
        let i0 = (((a.x.min(b.x) - snap - lo.x) / h - 0.5).floor().max(0.0)) as usize;
        let i1 = (((a.x.max(b.x) + snap - lo.x) / h - 0.5).ceil().max(0.0) as usize).min(nx - 1);
        let j0 = (((a.y.min(b.y) - snap - lo.y) / h - 0.5).floor().max(0.0)) as usize;
        let j1 = (((a.y.max(b.y) + snap - lo.y) / h - 0.5).ceil().max(0.0) as usize).min(ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = j * nx + i;
                if mask.inside[idx] && point_segment_distance(mask.center(i, j), a, b) <= snap {
                    mask.inside[idx] = false;
                }
            }
        }
    }
    Ok(mask)
}
