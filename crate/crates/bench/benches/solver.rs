use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use divsbl_bench::{default_problem, hetero_problem};
use divsbl_core::baselines::{bsbl_strong_solve, classic_sbl_solve};
use divsbl_core::inference::{
    compute_common_correlation, compute_posterior, diversify_complete, update_gamma,
};
use divsbl_core::{assemble_prior_covariance, solve, DivSbl, DualMode, SolverConfig};

/// A solver warmed up for a few iterations so the state is representative.
fn warmed(config: SolverConfig) -> (divsbl_bench::Problem, DivSbl) {
    let problem = default_problem(7);
    let mut solver = DivSbl::new(&problem.model, problem.layout, config).unwrap();
    for _ in 0..5 {
        solver.step().unwrap();
    }
    (problem, solver)
}

fn kernels(c: &mut Criterion) {
    let (problem, solver) = warmed(SolverConfig::default());
    let prior = solver.prior();
    let sigma0 = assemble_prior_covariance(prior, &problem.layout).unwrap();
    c.bench_function("posterior", |b| {
        b.iter(|| {
            compute_posterior(
                &problem.model,
                black_box(&sigma0),
                &problem.layout,
                prior.active_mask(),
            )
            .unwrap()
        })
    });
    c.bench_function("update_gamma", |b| {
        b.iter(|| update_gamma(black_box(prior), solver.posterior(), &problem.layout).unwrap())
    });
    let common = compute_common_correlation(prior, solver.posterior(), &problem.layout).unwrap();
    c.bench_function("diversify_complete", |b| {
        b.iter(|| {
            diversify_complete(
                black_box(prior),
                solver.posterior(),
                &problem.layout,
                &common,
                1e-3,
                500,
            )
            .unwrap()
        })
    });
}

fn outer_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("outer_step");
    for (name, mode) in [
        ("one_step", DualMode::OneStep),
        ("complete", DualMode::Complete),
    ] {
        let config = SolverConfig {
            dual_mode: mode,
            ..SolverConfig::default()
        };
        let (_, solver) = warmed(config);
        group.bench_function(name, |b| {
            b.iter_batched(
                || solver.clone(),
                |mut s| s.step().unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let problem = hetero_problem(162, 80, 3, 6, 11).unwrap();
    let config = SolverConfig {
        max_iters: 100,
        ..SolverConfig::default()
    };
    let mut group = c.benchmark_group("solve_100_iters");
    group.sample_size(10);
    group.bench_function("divsbl", |b| {
        b.iter(|| solve(&problem.model, &problem.layout, &config).unwrap())
    });
    group.bench_function("sbl", |b| {
        b.iter(|| classic_sbl_solve(&problem.model, &config).unwrap())
    });
    group.bench_function("bsbl", |b| {
        b.iter(|| bsbl_strong_solve(&problem.model, &problem.layout, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels, outer_step, full_solve);
criterion_main!(benches);
