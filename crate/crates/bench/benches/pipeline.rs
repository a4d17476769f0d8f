use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use kdst_bench::{desk, layered_ladder};
use kdst_core::rounding::{iteration_rng, solve_relaxation};
use kdst_core::verify::ExactConfig;
use kdst_core::{
    build_gst_tree, build_lp_kdst_star, enumerate_paths, exact_opt, gkr_round, run_algorithm_kdst, solve,
    RoundingConfig, SolverConfig,
};

fn paths_and_lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("relaxation");
    for (name, inst) in layered_ladder() {
        group.bench_with_input(BenchmarkId::new("enumerate", &name), &inst, |b, inst| {
            b.iter(|| enumerate_paths(black_box(inst)).unwrap())
        });
        let paths = enumerate_paths(&inst).unwrap();
        let lp = build_lp_kdst_star(&inst, &paths).unwrap();
        group.bench_with_input(BenchmarkId::new("simplex", &name), &lp.lp, |b, lp| {
            b.iter(|| solve(black_box(lp), &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn rounding(c: &mut Criterion) {
    let mut group = c.benchmark_group("rounding");
    for (name, inst) in layered_ladder() {
        let relax = solve_relaxation(&inst, &RoundingConfig::default()).unwrap();
        group.bench_function(BenchmarkId::new("gkr_round", &name), |b| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                gkr_round(&relax.tree, &relax.x_hat, &mut iteration_rng(7, 0, i))
            })
        });
        let config = RoundingConfig {
            keep_rounds: false,
            ..RoundingConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("end_to_end", &name), &inst, |b, inst| {
            b.iter(|| run_algorithm_kdst(black_box(inst), &config).unwrap())
        });
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let instances = desk(8);
    c.bench_function("exact_desk_8", |b| {
        b.iter(|| {
            for inst in &instances {
                black_box(exact_opt(inst, &ExactConfig::default()).unwrap());
            }
        })
    });
    c.bench_function("gst_tree_desk_8", |b| {
        b.iter(|| {
            for inst in &instances {
                let paths = enumerate_paths(inst).unwrap();
                black_box(build_gst_tree(&paths, inst).unwrap());
            }
        })
    });
}

criterion_group!(benches, paths_and_lp, rounding, oracles);
criterion_main!(benches);
