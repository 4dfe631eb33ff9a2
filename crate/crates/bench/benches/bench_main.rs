use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use lp_core::axioms::{derive_alpha, is_group_strategy_proof, GspMode};
use lp_core::enumerate::{enumerate_consistent, EnumerationOptions};
use lp_core::mechanisms::{da_alpha, SchoolSpec};
use lp_core::{run_lp, tabulate, Constraint, Instance, ProfileSpace};

fn school() -> SchoolSpec {
    let inst = Arc::new(Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap());
    SchoolSpec::new(inst, vec![1, 1, 1], vec![vec![2, 0, 1], vec![0, 1, 2], vec![0, 1, 2]]).unwrap()
}

fn engine(c: &mut Criterion) {
    let alpha = da_alpha(&school());
    let space = ProfileSpace::new(alpha.instance()).unwrap();
    let p = space.profile(space.len() / 2);
    c.bench_function("run_lp single profile", |b| {
        b.iter(|| run_lp(black_box(&alpha), black_box(&p)).unwrap())
    });
    c.bench_function("tabulate 3x3", |b| b.iter(|| tabulate(black_box(&alpha)).unwrap()));
}

fn axioms(c: &mut Criterion) {
    let table = tabulate(&da_alpha(&school())).unwrap();
    let mut group = c.benchmark_group("group strategy-proofness 3x3");
    group.bench_function("pairs", |b| {
        b.iter(|| is_group_strategy_proof(black_box(&table), GspMode::Pairs))
    });
    group.bench_function("exhaustive", |b| {
        b.iter(|| is_group_strategy_proof(black_box(&table), GspMode::Exhaustive))
    });
    group.finish();
    c.bench_function("derive assignment 3x3", |b| b.iter(|| derive_alpha(black_box(&table)).unwrap()));
}

fn enumeration(c: &mut Criterion) {
    let inst = Arc::new(Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap());
    let house = Constraint::house(inst).unwrap();
    let mut group = c.benchmark_group("enumerate house 3x3");
    group.sample_size(10);
    group.bench_function("all", |b| {
        b.iter(|| enumerate_consistent(black_box(&house), &EnumerationOptions::default()).unwrap())
    });
    let quotient = EnumerationOptions {
        quotient_symmetry: true,
        ..Default::default()
    };
    group.bench_function("up to symmetry", |b| {
        b.iter(|| enumerate_consistent(black_box(&house), &quotient).unwrap())
    });
    group.finish();
}

criterion_group!(benches, engine, axioms, enumeration);
criterion_main!(benches);
