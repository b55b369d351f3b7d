//! Sequential versus data-parallel throughput of the hot paths.
//!
//! Build with `--no-default-features` to measure the fallback alone; the
//! `parallel` rows then run sequentially too.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modae::assess::{hypervolume, unary_hv_diff};
use modae::dae::{evaluate, init_individual, DaeContext, EvoParams, Individual};
use modae::model::{ObjectiveMode, ObjectiveVector};
use modae::moea::{evolve_pareto, Budget, EngineConfig};
use modae::par::{par_map_init, Execution};
use modae::planner::{Planner, SearchBudget, Strategy};
use modae::zeno::{build_task, default_config, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn population_evaluation(c: &mut Criterion) {
    let task = build_task(&default_config(Variant::Lin, 6, ObjectiveMode::CostSum)).unwrap();
    let ctx = DaeContext::new(&task);
    let params = EvoParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pop: Vec<Individual> = (0..64).map(|_| init_individual(&ctx, &params, &mut rng)).collect();
    let mut group = c.benchmark_group("evaluate_64_mz6");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                par_map_init(exec, &pop, || Planner::new(&task), |planner, ind| {
                    evaluate(ind, &ctx, planner, &params, 10_000, 7).objectives
                })
            })
        });
    }
    group.finish();
}

fn engine_run(c: &mut Criterion) {
    let task = build_task(&default_config(Variant::Lin, 3, ObjectiveMode::RiskMax)).unwrap();
    let cfg = EngineConfig {
        budget: Budget::Nodes(100_000),
        ..EngineConfig::default()
    };
    let mut group = c.benchmark_group("evolve_pareto_mz3_100k_nodes");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| evolve_pareto(&task, &cfg, 3, exec).unwrap().evaluations));
    }
    group.finish();
}

fn planner_solve(c: &mut Criterion) {
    let task = build_task(&default_config(Variant::Lin, 9, ObjectiveMode::CostSum)).unwrap();
    let mut planner = Planner::new(&task);
    let mut group = c.benchmark_group("solve_mz9");
    for strategy in [Strategy::Makespan, Strategy::Cost] {
        group.bench_function(format!("{strategy:?}"), |b| {
            b.iter(|| planner.solve(task.init(), task.goal(), strategy, SearchBudget::nodes(100_000), 0).stats)
        });
    }
    group.finish();
}

fn hypervolume_gap(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let front = modae::zeno::ParetoFront::from_points((0..17).map(|i| ObjectiveVector::new(32 + 4 * i, 480 - 20 * i)));
    let mut group = c.benchmark_group("hypervolume");
    for n in [10usize, 100, 1000] {
        let approx: Vec<ObjectiveVector> = (0..n)
            .map(|_| ObjectiveVector::new(rng.gen_range(32..200), rng.gen_range(160..1000)))
            .collect();
        group.bench_with_input(BenchmarkId::new("unary_gap", n), &approx, |b, a| b.iter(|| unary_hv_diff(black_box(a), &front).unwrap()));
        let raw: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        group.bench_with_input(BenchmarkId::new("raw", n), &raw, |b, r| b.iter(|| hypervolume(black_box(r), [1.0, 1.0])));
    }
    group.finish();
}

criterion_group!(benches, population_evaluation, engine_run, planner_solve, hypervolume_gap);
criterion_main!(benches);
