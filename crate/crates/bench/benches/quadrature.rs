//! Hot-path benchmarks: adaptive radial integration, operator point
//! evaluations across dimensions, and the symmetric bilinear form.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use nllab_core::fields::{make_bump, make_gaussian};
use nllab_core::quadrature::integrate_radial;
use nllab_core::{frac_laplacian, gagliardo_form, riesz_potential, ProblemParams, QuadratureSpec};

fn bench_radial_integration(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    c.bench_function("radial/oscillatory_decay", |b| {
        b.iter(|| {
            let g = |r: f64| (-0.25 * r).exp() * (1.0 + 0.3 * (1.7 * r).sin());
            integrate_radial(g, black_box(0.0), black_box(24.0), &spec).unwrap()
        })
    });
}

fn bench_operator_points(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let mut group = c.benchmark_group("operator_point");
    for d in [1usize, 2, 3] {
        let params = ProblemParams::new(d, 0.5, 2.0).unwrap();
        let f = make_bump([0.0; 3], 1.0, d);
        group.bench_function(format!("frac_laplacian/d{d}"), |b| {
            b.iter(|| frac_laplacian(&f, black_box([0.4, 0.0, 0.0]), &params, &spec).unwrap())
        });
    }
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    let f = make_gaussian([0.0; 3], 1.0, 3);
    group.bench_function("riesz_potential/d3", |b| {
        b.iter(|| riesz_potential(&f, black_box([0.4, 0.0, 0.0]), &params, &spec).unwrap())
    });
    group.finish();
}

fn bench_bilinear_form(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let params = ProblemParams::new(1, 0.5, 2.0).unwrap();
    let v = make_bump([0.0; 3], 1.0, 1);
    let w = make_bump([0.5, 0.0, 0.0], 1.2, 1);
    c.bench_function("bilinear/gagliardo_d1", |b| {
        b.iter(|| gagliardo_form(&v, &w, &params, &spec).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_radial_integration, bench_operator_points, bench_bilinear_form
}
criterion_main!(benches);
