use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qrm_bench::{qr_model, xi_model};
use qrm_core::fock::build;
use qrm_core::inertia::dense_eigenvalues;
use qrm_core::overlaps::{overlap_closed, overlap_quadrature, required_nodes};
use qrm_core::spectral::count_below;

fn overlaps(c: &mut Criterion) {
    let mut g = c.benchmark_group("overlap");
    for (n, k) in [(5, 5), (30, 20), (60, 55)] {
        g.bench_with_input(BenchmarkId::new("closed_form", format!("{n}_{k}")), &(n, k), |b, &(n, k)| {
            b.iter(|| overlap_closed(black_box(n), black_box(k), black_box(0.7)).unwrap())
        });
        let nodes = required_nodes(n, k) + 20;
        g.bench_with_input(BenchmarkId::new("quadrature", format!("{n}_{k}")), &(n, k), |b, &(n, k)| {
            b.iter(|| overlap_quadrature(black_box(n), black_box(k), black_box(0.7), nodes).unwrap())
        });
    }
    g.finish();
}

fn counting(c: &mut Criterion) {
    let mut g = c.benchmark_group("count_below");
    g.sample_size(20);
    for cutoff in [100, 400] {
        let op = build(&qr_model(cutoff)).unwrap();
        let lambda = cutoff as f64 / 4.0;
        g.bench_with_input(BenchmarkId::new("inertia", cutoff), &op, |b, op| b.iter(|| count_below(op, black_box(lambda)).unwrap()));
        let dense = op.matrix.to_dense();
        g.bench_with_input(BenchmarkId::new("dense_eigen", cutoff), &dense, |b, m| {
            b.iter(|| dense_eigenvalues(m).unwrap().iter().filter(|&&v| v <= lambda).count())
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_xi");
    for cutoff in [6, 12] {
        let spec = xi_model(cutoff);
        g.bench_with_input(BenchmarkId::from_parameter(cutoff), &spec, |b, s| b.iter(|| build(black_box(s)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, overlaps, counting, assembly);
criterion_main!(benches);
