use ahi_core::campaign::{run_campaign, CampaignConfig, Suite};
use ahi_core::geometry::random_structure;
use ahi_core::identities::{theorem_sides, DenseOracle, Mutation};
use ahi_core::sampling::{random_form, random_primitive_germ, trial_rng};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn fiber_operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("fiber");
    for n in 1..=4 {
        let fiber = random_structure(1, n, 0.35).unwrap().fiber().unwrap();
        let ops = fiber.point();
        let a = random_form(&mut trial_rng(1, 0), 2 * n, n);
        group.bench_with_input(BenchmarkId::new("hodge_star", n), &a, |b, a| {
            b.iter(|| ops.hodge_star(black_box(a)))
        });
        group.bench_with_input(BenchmarkId::new("lambda", n), &a, |b, a| {
            b.iter(|| ops.lambda(black_box(a)))
        });
        group.bench_with_input(BenchmarkId::new("lefschetz_decompose", n), &a, |b, a| {
            b.iter(|| ops.lefschetz_decompose(black_box(a), n).unwrap())
        });
        group.bench_function(BenchmarkId::new("fiber_setup", n), |b| {
            b.iter(|| random_structure(1, n, 0.35).unwrap().fiber().unwrap())
        });
    }
    group.finish();
}

fn theorem(c: &mut Criterion) {
    let mut group = c.benchmark_group("theorem_sides");
    for n in 1..=3 {
        let fiber = random_structure(2, n, 0.35).unwrap().fiber().unwrap();
        let alpha = random_primitive_germ(&fiber, &mut trial_rng(2, 0), 1, 1).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| theorem_sides(&fiber, black_box(&alpha), 1, 0, Mutation::None).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_oracle");
    group.sample_size(10);
    for n in 1..=3 {
        let s = random_structure(3, n, 0.35).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| DenseOracle::new(black_box(&s)).unwrap())
        });
    }
    group.finish();
}

fn campaign(c: &mut Criterion) {
    let cfg = CampaignConfig {
        presets: vec![],
        random_trials: 5,
        suites: vec![Suite::Theorem, Suite::ProofDisplays],
        ..CampaignConfig::default()
    };
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    group.bench_function("theorem_5_trials", |b| {
        b.iter(|| run_campaign(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, fiber_operators, theorem, oracle, campaign);
criterion_main!(benches);
