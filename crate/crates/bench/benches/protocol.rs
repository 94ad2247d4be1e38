use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use dgroups::availability::{alpha_availability, generate_diurnal, GeneratorParams};
use dgroups::metrics::{contribution_eq2, contribution_eq3};
use dgroups::simulator::build_world;
use dgroups::{GroupId, GroupSummary, Scheme, SimConfig, Simulation, SlotIndex};

fn summary(seed: u64, peak: usize) -> GroupSummary {
    let peak = SlotIndex::new(peak, 12).unwrap();
    GroupSummary {
        group_id: GroupId(seed),
        size: 1,
        vector: generate_diurnal(seed, peak, 12, &GeneratorParams::default()).unwrap(),
    }
}

fn contributions(c: &mut Criterion) {
    let a = summary(1, 0);
    let b = summary(2, 6);
    c.bench_function("eq2_contribution", |bench| {
        bench.iter(|| contribution_eq2(black_box(&a), black_box(&b)))
    });
    c.bench_function("eq3_contribution", |bench| {
        bench.iter(|| contribution_eq3(black_box(&a), black_box(&b)))
    });
}

fn alpha(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_availability");
    for n in [2usize, 6, 8] {
        let roster: Vec<_> = (0..n).map(|i| summary(i as u64, i % 12).vector).collect();
        let slot = SlotIndex::new(3, 12).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &roster, |bench, roster| {
            bench.iter(|| alpha_availability(roster.iter(), 2, slot))
        });
    }
    group.finish();
}

fn worlds(c: &mut Criterion) {
    let cfg = SimConfig {
        peer_count: 1000,
        seed: 7,
        ..SimConfig::default()
    };
    c.bench_function("build_world_1000", |bench| {
        bench.iter(|| build_world(black_box(&cfg)).unwrap())
    });

    let world = build_world(&cfg).unwrap();
    c.bench_function("first_round_1000", |bench| {
        bench.iter_batched(
            || Simulation::with_world(cfg.clone(), world.clone()),
            |mut sim| sim.run_round().unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn convergence(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_to_convergence_1000");
    group.sample_size(10);
    for scheme in [Scheme::Eq2, Scheme::Eq3] {
        let cfg = SimConfig {
            peer_count: 1000,
            scheme,
            seed: 7,
            ..SimConfig::default()
        };
        group.bench_function(scheme.name(), |bench| {
            bench.iter(|| dgroups::simulator::run(&cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, contributions, alpha, worlds, convergence);
criterion_main!(benches);
