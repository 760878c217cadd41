use std::hint::black_box;

use conflab_bench::hexagon;
use conflab_core::conformal::{builtin_map, sc_solve, MapName};
use conflab_core::geodesic::distance_field;
use conflab_core::geometry::{builtin_domain, DomainName, DomainParams, Point};
use conflab_core::integrals::{brennan_integral, QuadratureSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn geodesic(c: &mut Criterion) {
    let comb = builtin_domain(DomainName::Comb, &DomainParams { n_slits: 4, ..DomainParams::default() }).unwrap();
    let mut g = c.benchmark_group("distance_field");
    g.sample_size(10);
    g.bench_function("comb4_h0.02", |b| b.iter(|| distance_field(&comb, black_box(Point::new(1.75, 0.1)), 0.02).unwrap()));
    g.finish();
}

fn integrals(c: &mut Criterion) {
    let koebe = builtin_map(MapName::Koebe);
    let spec = QuadratureSpec::default();
    c.bench_function("brennan_integral/koebe_s0.5_eps1e-3", |b| {
        b.iter(|| brennan_integral(&koebe, black_box(0.5), 1e-3, &spec).unwrap())
    });
}

fn schwarz_christoffel(c: &mut Criterion) {
    let hex = hexagon();
    let mut g = c.benchmark_group("sc_solve");
    g.sample_size(20);
    g.bench_function("hexagon", |b| b.iter(|| sc_solve(black_box(&hex), 1e-10).unwrap()));
    g.finish();
}

criterion_group!(benches, geodesic, integrals, schwarz_christoffel);
criterion_main!(benches);
