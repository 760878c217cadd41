//! Intrinsic distances on planar domains by shortest paths on a cell-center
//! grid graph.
//!
//! Vertices are the inside cells of [`rasterize`]; edges are the 16-neighborhood
//! moves (king and knight) weighted by Euclidean length. An edge exists only if
//! its open segment meets no boundary, hole or slit segment, so every graph
//! path is an admissible curve in the domain and grid distances never
//! undercut the intrinsic distance between the snapped endpoints.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{open_segment_hits, point_segment_distance, rasterize, GeometryError, GridMask, PlanarDomain, Point};
use crate::report::sig9;

/// Worst-case ratio of 16-neighborhood grid length to Euclidean length.
pub const STENCIL_OVERESTIMATE: f64 = 1.028;

/// The 16 moves, paired so that `OFFSETS[k + 8] == -OFFSETS[k]`.
pub const OFFSETS: [(i32, i32); 16] = [
    (1, 0),
    (0, 1),
    (1, 1),
    (-1, 1),
    (2, 1),
    (1, 2),
    (-1, 2),
    (-2, 1),
    (-1, 0),
    (0, -1),
    (-1, -1),
    (1, -1),
    (-2, -1),
    (-1, -2),
    (1, -2),
    (2, -1),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point {0} is not inside the domain")]
    OutsideDomain(Point),
    #[error("no inside cell at this resolution near {0}")]
    NoCell(Point),
    #[error("points are in different grid components (refine h or the domain is disconnected)")]
    Unreachable,
    #[error("empty mask: the domain has no inside cells at this resolution")]
    EmptyMask,
}

/// Uniform bucket grid over the domain's segments for local queries.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    segs: Vec<(Point, Point)>,
    slit: Vec<bool>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentIndex {
    pub fn new(domain: &PlanarDomain, cell: f64) -> Self {
        let n_ring = domain.segments().count() - domain.slit_segments().count();
        let segs: Vec<(Point, Point)> = domain.segments().collect();
        let slit = (0..segs.len()).map(|k| k >= n_ring).collect();
        let (lo, hi) = domain.bounding_box();
        let origin = Point::new(lo.x - cell, lo.y - cell);
        let nx = ((hi.x - origin.x) / cell).ceil() as usize + 2;
        let ny = ((hi.y - origin.y) / cell).ceil() as usize + 2;
        let mut idx = Self { segs, slit, origin, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for k in 0..idx.segs.len() {
            let (a, b) = idx.segs[k];
            let (i0, j0, i1, j1) = idx.range(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    idx.buckets[j * nx + i].push(k as u32);
                }
            }
        }
        idx
    }

    fn range(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> (usize, usize, usize, usize) {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (
            f(x0, self.origin.x, self.nx),
            f(y0, self.origin.y, self.ny),
            f(x1, self.origin.x, self.nx),
            f(y1, self.origin.y, self.ny),
        )
    }

    fn candidates(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> impl Iterator<Item = usize> + '_ {
        let (i0, j0, i1, j1) = self.range(x0, y0, x1, y1);
        (j0..=j1).flat_map(move |j| (i0..=i1).flat_map(move |i| self.buckets[j * self.nx + i].iter().map(|&k| k as usize)))
    }

    /// Same predicate as [`PlanarDomain::segment_clear`].
    pub fn segment_clear(&self, a: Point, b: Point) -> bool {
        !self
            .candidates(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
            .any(|k| open_segment_hits(a, b, self.segs[k].0, self.segs[k].1))
    }

    /// Whether any segment lies within `r` of `p`; `slits_only` restricts to slit segments.
    pub fn any_within(&self, p: Point, r: f64, slits_only: bool) -> bool {
        self.candidates(p.x - r, p.y - r, p.x + r, p.y + r)
            .any(|k| (!slits_only || self.slit[k]) && point_segment_distance(p, self.segs[k].0, self.segs[k].1) <= r)
    }
}

/// Grid graph of a rasterized domain with precomputed edge admissibility.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub mask: GridMask,
    /// Bit `k` set iff the move `OFFSETS[k]` from this cell is an edge.
    pub adjacency: Vec<u16>,
    pub index: SegmentIndex,
}

impl GridGraph {
    pub fn new(domain: &PlanarDomain, h: f64) -> Result<Self, GeodesicError> {
        let mask = rasterize(domain, h)?;
        if mask.count() == 0 {
            return Err(GeodesicError::EmptyMask);
        }
        let index = SegmentIndex::new(domain, 4.0 * h);
        let (nx, ny) = (mask.nx as i64, mask.ny as i64);
        let adjacency: Vec<u16> = (0..mask.inside.len())
            .into_par_iter()
            .map(|c| {
                if !mask.inside[c] {
                    return 0;
                }
                let (i, j) = mask.coords(c);
                let pc = mask.center(i, j);
                let mut bits = 0u16;
                for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let (ni, nj) = (i as i64 + di as i64, j as i64 + dj as i64);
                    if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                        continue;
                    }
                    let n = mask.index(ni as usize, nj as usize);
                    if mask.inside[n] && index.segment_clear(pc, mask.center(ni as usize, nj as usize)) {
                        bits |= 1 << k;
                    }
                }
                bits
            })
            .collect();
        Ok(Self { mask, adjacency, index })
    }

    pub fn h(&self) -> f64 {
        self.mask.h
    }

    #[inline]
    pub fn neighbor(&self, cell: usize, k: usize) -> Option<usize> {
        if self.adjacency[cell] & (1 << k) == 0 {
            return None;
        }
        let (i, j) = self.mask.coords(cell);
        let (di, dj) = OFFSETS[k];
        Some(self.mask.index((i as i64 + di as i64) as usize, (j as i64 + dj as i64) as usize))
    }

    /// Single-source shortest paths (Dijkstra; ties broken by cell index).
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let h = self.mask.h;
        let weights: Vec<f64> = OFFSETS.iter().map(|&(a, b)| h * ((a * a + b * b) as f64).sqrt()).collect();
        let mut dist = vec![f64::INFINITY; self.mask.inside.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse((OrderedFloat(0.0), source)));
        while let Some(Reverse((OrderedFloat(d), c))) = heap.pop() {
            if d > dist[c] {
                continue;
            }
            let bits = self.adjacency[c];
            if bits == 0 {
                continue;
            }
            for (k, w) in weights.iter().enumerate() {
                if bits & (1 << k) == 0 {
                    continue;
                }
                let (i, j) = self.mask.coords(c);
                let (di, dj) = OFFSETS[k];
                let n = self.mask.index((i as i64 + di as i64) as usize, (j as i64 + dj as i64) as usize);
                let nd = d + w;
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Reverse((OrderedFloat(nd), n)));
                }
            }
        }
        dist
    }

    /// Inside cell nearest to `p` that `p` can see (falls back to the nearest cell).
    pub fn snap(&self, p: Point) -> Option<usize> {
        let cell = self.mask.nearest_inside(p)?;
        if self.index.segment_clear(p, self.mask.center_of(cell)) {
            return Some(cell);
        }
        let (ci, cj) = self.mask.cell_of(p).map(|(i, j)| (i as i64, j as i64))?;
        let mut best: Option<(f64, usize)> = None;
        for dj in -3..=3 {
            for di in -3..=3 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i >= self.mask.nx as i64 || j >= self.mask.ny as i64 {
                    continue;
                }
                let idx = self.mask.index(i as usize, j as usize);
                let c = self.mask.center_of(idx);
                if self.mask.inside[idx] && self.index.segment_clear(p, c) {
                    let d = c.dist(p);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, idx));
                    }
                }
            }
        }
        Some(best.map_or(cell, |b| b.1))
    }

    /// Inside cells having at least one missing stencil neighbor.
    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.mask.inside.len())
            .filter(|&c| self.mask.inside[c] && self.adjacency[c] & 0x0f0f != 0x0f0f)
            .collect()
    }
}

/// Sampled intrinsic distance from a source point.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub mask: GridMask,
    pub source: Point,
    pub source_cell: usize,
    /// Per grid cell; `+inf` outside the domain or unreachable.
    pub dist: Vec<f64>,
}

impl DistanceField {
    pub fn at_cell(&self, idx: usize) -> f64 {
        self.dist[idx]
    }

    /// Distance at the cell containing `p` (snapped to the nearest inside cell).
    pub fn at(&self, p: Point) -> f64 {
        self.mask.nearest_inside(p).map_or(f64::INFINITY, |c| self.dist[c])
    }

    pub fn unreachable_count(&self) -> usize {
        self.mask
            .inside
            .iter()
            .zip(&self.dist)
            .filter(|(&ins, d)| ins && d.is_infinite())
            .count()
    }

    /// Largest finite distance and its cell.
    pub fn farthest(&self) -> (f64, usize) {
        let mut best = (0.0, self.source_cell);
        for (idx, &d) in self.dist.iter().enumerate() {
            if d.is_finite() && d > best.0 {
                best = (d, idx);
            }
        }
        best
    }

    /// CSV with header `x,y,dist`, row-major over inside cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,dist")?;
        for (idx, &ins) in self.mask.inside.iter().enumerate() {
            if ins {
                let c = self.mask.center_of(idx);
                writeln!(w, "{},{},{}", sig9(c.x), sig9(c.y), sig9(self.dist[idx]))?;
            }
        }
        Ok(())
    }
}

/// Distance field of `source` on a prebuilt graph.
pub fn distance_field_on(graph: &GridGraph, source: Point) -> Result<DistanceField, GeodesicError> {
    let cell = graph.snap(source).ok_or(GeodesicError::NoCell(source))?;
    Ok(DistanceField {
        mask: graph.mask.clone(),
        source,
        source_cell: cell,
        dist: graph.distances_from(cell),
    })
}

pub fn distance_field(domain: &PlanarDomain, source: Point, h: f64) -> Result<DistanceField, GeodesicError> {
    if !domain.contains(source) {
        return Err(GeodesicError::OutsideDomain(source));
    }
    let graph = GridGraph::new(domain, h)?;
    distance_field_on(&graph, source)
}

/// Grid estimate of an intrinsic distance or diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicEstimate {
    /// `raw / 1.028 - 2h`.
    pub lower: f64,
    pub raw: f64,
    pub h: f64,
    /// Stencil size (16 = king + knight moves).
    pub stencil: u32,
    pub converged: bool,
}

impl GeodesicEstimate {
    fn from_raw(raw: f64, h: f64) -> Self {
        Self {
            lower: raw / STENCIL_OVERESTIMATE - 2.0 * h,
            raw,
            h,
            stencil: OFFSETS.len() as u32,
            converged: false,
        }
    }
}

pub fn geodesic_distance(domain: &PlanarDomain, a: Point, b: Point, h: f64) -> Result<GeodesicEstimate, GeodesicError> {
    for p in [a, b] {
        if !domain.contains(p) {
            return Err(GeodesicError::OutsideDomain(p));
        }
    }
    let graph = GridGraph::new(domain, h)?;
    let ca = graph.snap(a).ok_or(GeodesicError::NoCell(a))?;
    let cb = graph.snap(b).ok_or(GeodesicError::NoCell(b))?;
    let raw = graph.distances_from(ca)[cb];
    if raw.is_infinite() {
        return Err(GeodesicError::Unreachable);
    }
    Ok(GeodesicEstimate::from_raw(raw, h))
}

/// Farthest-point sweeps on one graph; returns the best pairwise grid distance.
pub fn diameter_sweeps(graph: &GridGraph, n_landmarks: usize) -> f64 {
    let boundary = graph.boundary_cells();
    let seeds: Vec<usize> = if boundary.is_empty() {
        graph.mask.inside.iter().position(|&b| b).into_iter().collect()
    } else {
        let n = n_landmarks.clamp(1, boundary.len());
        (0..n).map(|k| boundary[k * boundary.len() / n]).collect()
    };
    let mut best = 0.0f64;
    for seed in seeds {
        let mut current = seed;
        let mut last = -1.0f64;
        // Each sweep is a Dijkstra run; the farthest cell becomes the next source.
        for _ in 0..32 {
            let dist = graph.distances_from(current);
            let (d, far) = dist
                .iter()
                .enumerate()
                .filter(|(_, d)| d.is_finite())
                .fold((0.0, current), |acc, (i, &d)| if d > acc.0 { (d, i) } else { acc });
            best = best.max(d);
            if d <= last {
                break;
            }
            last = d;
            current = far;
        }
    }
    best
}

/// Lower-bound diameter estimate at `h`, with a refinement check against `h / 2`.
pub fn geodesic_diameter(domain: &PlanarDomain, h: f64, n_landmarks: usize) -> Result<GeodesicEstimate, GeodesicError> {
    let coarse = geodesic_diameter_at(domain, h, n_landmarks)?;
    let fine = geodesic_diameter_at(domain, 0.5 * h, n_landmarks)?;
    Ok(GeodesicEstimate {
        converged: ((coarse.raw - fine.raw) / fine.raw).abs() < 0.01,
        ..coarse
    })
}

/// Single-resolution diameter estimate (`converged` is always false).
pub fn geodesic_diameter_at(domain: &PlanarDomain, h: f64, n_landmarks: usize) -> Result<GeodesicEstimate, GeodesicError> {
    let graph = GridGraph::new(domain, h)?;
    Ok(GeodesicEstimate::from_raw(diameter_sweeps(&graph, n_landmarks), h))
}

/// Grid gradient of a sampled field: central differences where both axis
/// neighbors are reachable by an edge, one-sided otherwise.
pub fn grid_gradient(graph: &GridGraph, values: &[f64], cell: usize) -> Option<(f64, f64)> {
    let v0 = values[cell];
    if !v0.is_finite() {
        return None;
    }
    let h = graph.h();
    let get = |k: usize| graph.neighbor(cell, k).map(|n| values[n]).filter(|v| v.is_finite());
    let axis = |plus: usize, minus: usize| match (get(plus), get(minus)) {
        (Some(p), Some(m)) => Some((p - m) / (2.0 * h)),
        (Some(p), None) => Some((p - v0) / h),
        (None, Some(m)) => Some((v0 - m) / h),
        (None, None) => None,
    };
    Some((axis(0, 8)?, axis(1, 9)?))
}

/// Distance field packaged as a Poincaré witness, with gradient statistics.
#[derive(Debug, Clone)]
pub struct DistanceWitness {
    pub field: DistanceField,
    /// Cells farther than `3h` from every boundary, slit and the source.
    pub qualifying: usize,
    /// Fraction of qualifying cells with `0.9 <= |grad| <= 1.05`.
    pub unit_gradient_fraction: f64,
}

pub fn distance_witness_on(graph: &GridGraph, x0: Point) -> Result<DistanceWitness, GeodesicError> {
    let field = distance_field_on(graph, x0)?;
    let h = graph.h();
    let source_c = graph.mask.center_of(field.source_cell);
    let stats: Vec<bool> = (0..graph.mask.inside.len())
        .into_par_iter()
        .filter_map(|c| {
            if !graph.mask.inside[c] || !field.dist[c].is_finite() {
                return None;
            }
            let p = graph.mask.center_of(c);
            if p.dist(source_c) <= 3.0 * h || graph.index.any_within(p, 3.0 * h, false) {
                return None;
            }
            let (gx, gy) = grid_gradient(graph, &field.dist, c)?;
            let g = gx.hypot(gy);
            Some((0.9..=1.05).contains(&g))
        })
        .collect();
    let good = stats.iter().filter(|&&b| b).count();
    Ok(DistanceWitness {
        qualifying: stats.len(),
        unit_gradient_fraction: if stats.is_empty() { 0.0 } else { good as f64 / stats.len() as f64 },
        field,
    })
}

pub fn distance_witness(domain: &PlanarDomain, x0: Point, h: f64) -> Result<DistanceWitness, GeodesicError> {
    if !domain.contains(x0) {
        return Err(GeodesicError::OutsideDomain(x0));
    }
    let graph = GridGraph::new(domain, h)?;
    distance_witness_on(&graph, x0)
}
