use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frechet_testing::freespace::{Axis, ExplicitMatrix, FreeSpaceOracle};
use frechet_testing::geometry::{gen_straight_curve, perturb_within};
use frechet_testing::reference::{discrete_frechet, exact_locality, min_cost_coupling};
use frechet_testing::testers::{frechet_tester1, hausdorff_tester, locality_tester, permeable, Tester1Params};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn banded(n: usize, w: usize) -> FreeSpaceOracle {
    FreeSpaceOracle::from_matrix(ExplicitMatrix::from_fn(n, n, |i, j| i.abs_diff(j) <= w).unwrap())
}

fn bench_testers(c: &mut Criterion) {
    let mut g = c.benchmark_group("testers");
    for n in [1024usize, 4096, 16384] {
        let o = banded(n, 2);
        g.bench_with_input(BenchmarkId::new("frechet1_yes", n), &o, |b, o| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            b.iter(|| frechet_tester1(o, &Tester1Params::new(2, 0.2), &mut rng).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("permeable_full", n), &o, |b, o| {
            b.iter(|| permeable(o, Axis::Columns, 1, black_box(n)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("locality_sigma_0.1", n), &o, |b, o| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            b.iter(|| locality_tester(o, 0.1, 2, &mut rng).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("hausdorff", n), &o, |b, o| {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            b.iter(|| hausdorff_tester(o, 0.05, &mut rng).unwrap())
        });
    }
    g.finish();
}

fn bench_curve_oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = gen_straight_curve(4096, 2, (1.0, 1.0), 0.05, &mut rng).unwrap();
    let q = perturb_within(&p, 0.3, &mut rng).unwrap();
    let lazy = FreeSpaceOracle::from_curves(p, q, 1.0).unwrap();
    c.bench_function("curve_oracle_frechet1", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        b.iter(|| frechet_tester1(&lazy, &Tester1Params::new(2, 0.2), &mut rng).unwrap())
    });
}

fn bench_reference(c: &mut Criterion) {
    let mut g = c.benchmark_group("reference");
    g.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [256usize, 1024] {
        let p = gen_straight_curve(n, 2, (1.0, 1.0), 0.1, &mut rng).unwrap();
        let q = perturb_within(&p, 0.4, &mut rng).unwrap();
        let m = ExplicitMatrix::from_curves(&p, &q, 0.5).unwrap();
        g.bench_with_input(BenchmarkId::new("discrete_frechet", n), &(&p, &q), |b, (p, q)| {
            b.iter(|| discrete_frechet(p, q).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("min_cost_coupling", n), &m, |b, m| b.iter(|| min_cost_coupling(m)));
        g.bench_with_input(BenchmarkId::new("exact_locality", n), &m, |b, m| b.iter(|| exact_locality(m)));
    }
    g.finish();
}

criterion_group!(benches, bench_testers, bench_curve_oracle, bench_reference);
criterion_main!(benches);
