use std::f64::consts::FRAC_PI_4;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use openangle::indicators::{hypervolume, multiplicative_epsilon, pareto_filter};
use openangle::landscape::generate_instance;
use openangle::scalarize::make_norm;
use openangle::stats::mann_whitney_u;
use openangle::{run_ea, EaParams, InstanceParams, ObjectiveVector};

fn landscape(c: &mut Criterion) {
    let inst = generate_instance(InstanceParams::new(128, 4, -0.7, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bits: Vec<bool> = (0..128).map(|_| rng.random()).collect();
    c.bench_function("evaluate n=128 k=4", |b| b.iter(|| inst.evaluate(black_box(&bits)).unwrap()));
    c.bench_function("generate n=128 k=4", |b| {
        b.iter(|| generate_instance(black_box(InstanceParams::new(128, 4, 0.3, 5))).unwrap())
    });
}

fn ea(c: &mut Criterion) {
    let inst = generate_instance(InstanceParams::new(128, 4, -0.7, 1)).unwrap();
    let cfg = make_norm(FRAC_PI_4, 0.3).unwrap();
    let mut seed = 0;
    c.bench_function("run_ea n=128", |b| {
        b.iter(|| {
            seed += 1;
            run_ea(&inst, &cfg, &EaParams::for_length(128, seed)).unwrap()
        })
    });
}

fn random_points(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| ObjectiveVector::new(rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)))
        .collect()
}

fn indicators(c: &mut Criterion) {
    let pts = random_points(2000, 3);
    c.bench_function("pareto_filter 2000", |b| {
        b.iter_batched(|| pts.clone(), |p| pareto_filter(p), BatchSize::SmallInput)
    });
    let set = pareto_filter(random_points(2000, 4));
    let reference = pareto_filter(random_points(2000, 5));
    let origin = ObjectiveVector::new(0.0, 0.0);
    c.bench_function("hypervolume", |b| b.iter(|| hypervolume(black_box(&set), origin).unwrap()));
    c.bench_function("multiplicative_epsilon", |b| {
        b.iter(|| multiplicative_epsilon(black_box(&set), &reference).unwrap())
    });
}

fn stats(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a: Vec<f64> = (0..30).map(|_| rng.random()).collect();
    let b2: Vec<f64> = (0..30).map(|_| rng.random()).collect();
    c.bench_function("mann_whitney_u 30x30", |b| b.iter(|| mann_whitney_u(black_box(&a), &b2).unwrap()));
    let small_a = &a[..8];
    let small_b = &b2[..8];
    c.bench_function("mann_whitney_u exact 8x8", |b| {
        b.iter(|| mann_whitney_u(black_box(small_a), small_b).unwrap())
    });
}

criterion_group!(benches, landscape, ea, indicators, stats);
criterion_main!(benches);
