use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use atn_core::evolution::{run_generation, Individual};
use atn_core::maze::MARKOV_7X5;
use atn_core::rng;
use atn_core::token::{random_genome, translate};
use atn_core::{evaluate, interpret, Encoding, EvolutionConfig, Maze};

fn bench_interpret(c: &mut Criterion) {
    let cfg = EvolutionConfig::default();
    let code = cfg.genetic_code();
    let mut r = rng::stream(1);
    let genomes: Vec<_> = (0..64).map(|_| random_genome(Encoding::Integer, 300, &mut r)).collect();
    let mut i = 0;
    c.bench_function("translate+interpret L=300", |b| {
        b.iter(|| {
            i = (i + 1) % genomes.len();
            let tokens = translate(black_box(&genomes[i]), &code).unwrap();
            interpret(&tokens, cfg.build)
        })
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let maze = Maze::parse(MARKOV_7X5).unwrap();
    let mut cfg = EvolutionConfig::default();
    cfg.policy.default_action = atn_core::DefaultAction::Random;
    let code = cfg.genetic_code();
    let mut r = rng::stream(2);
    let atns: Vec<_> = (0..64)
        .map(|_| interpret(&translate(&random_genome(Encoding::Integer, 300, &mut r), &code).unwrap(), cfg.build))
        .collect();
    let mut i = 0;
    c.bench_function("evaluate markov7x5 random-default", |b| {
        b.iter(|| {
            i = (i + 1) % atns.len();
            evaluate(black_box(&atns[i]), &maze, &cfg.policy, &mut r)
        })
    });
}

fn bench_generation(c: &mut Criterion) {
    let maze = Maze::parse(MARKOV_7X5).unwrap();
    let mut cfg = EvolutionConfig::default();
    cfg.policy.default_action = atn_core::DefaultAction::Random;
    let code = cfg.genetic_code();
    let mut r = rng::stream(3);
    let population: Vec<Individual> = (0..cfg.population_size)
        .map(|_| {
            let mut ind = Individual::new(random_genome(Encoding::Integer, 300, &mut r), &code, cfg.build).unwrap();
            ind.record(evaluate(&ind.atn, &maze, &cfg.policy, &mut r));
            ind
        })
        .collect();
    let mut group = c.benchmark_group("generation");
    group.sample_size(10);
    group.bench_function("P=300 n=60 L=300", |b| {
        b.iter_batched(
            || (population.clone(), rng::stream(4)),
            |(pop, mut stream)| run_generation(pop, &maze, &cfg, &code, &mut stream).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_interpret, bench_evaluate, bench_generation);
criterion_main!(benches);
