use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use viou_bench::AssociationFixture;
use viou_core::affinity::{build_cost_matrix, AssocParams, CostMatrix};
use viou_core::assignment::{solve, solve_greedy};

fn bench_cost_matrix(c: &mut Criterion) {
    let params = AssocParams::default();
    let mut group = c.benchmark_group("build_cost_matrix");
    for objects in [5usize, 25, 50] {
        let fixture = AssociationFixture::new(objects, 2048, 7);
        group.throughput(Throughput::Elements((objects * objects) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(objects), &fixture, |b, f| {
            let dets = f.det_side();
            let trks = f.trk_side();
            b.iter(|| build_cost_matrix(black_box(&dets), black_box(&trks), &params).unwrap());
        });
    }
    group.finish();
}

fn bench_assignment(c: &mut Criterion) {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let mut group = c.benchmark_group("assignment");
    for n in [8usize, 32, 64] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let admissible: Vec<bool> = (0..n * n).map(|_| rng.random_bool(0.6)).collect();
        let m = CostMatrix::from_parts(n, n, cost, admissible);
        group.bench_with_input(BenchmarkId::new("optimal", n), &m, |b, m| {
            b.iter(|| solve(black_box(m)));
        });
        group.bench_with_input(BenchmarkId::new("greedy", n), &m, |b, m| {
            b.iter(|| solve_greedy(black_box(m)));
        });
    }
    group.finish();
}

fn bench_association_step(c: &mut Criterion) {
    let params = AssocParams::default();
    let fixture = AssociationFixture::new(25, 2048, 11);
    c.bench_function("association_step_25x2048", |b| {
        let dets = fixture.det_side();
        let trks = fixture.trk_side();
        b.iter(|| {
            let m = build_cost_matrix(black_box(&dets), black_box(&trks), &params).unwrap();
            solve(&m)
        });
    });
}

criterion_group!(
    benches,
    bench_cost_matrix,
    bench_assignment,
    bench_association_step
);
criterion_main!(benches);
