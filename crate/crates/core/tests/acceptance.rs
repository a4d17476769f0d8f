//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use kdst_core::harness::experiment::deterministic_part;
use kdst_core::harness::{desk_suite_instance, generate, run_experiment, ExperimentSpec, GeneratedInstance, GeneratorSpec};
use kdst_core::lp::build_lp_kdst;
use kdst_core::paths::GstTree;
use kdst_core::rounding::{
    gkr_round, iteration_rng, iterations_kdst, round_relaxation, solve_relaxation, Relaxation,
};
use kdst_core::verify::{exact_opt, relaxation_witness, verify_subgraph, ExactConfig};
use kdst_core::{
    baseline_t_approx, build_gst_tree, check_minimal_lemmas, enumerate_paths, max_flow_value, minimalize,
    run_steiner_subgraph, solve, verify, DirectedGraph, Edge, EdgeSetSolution, KdstInstance, RoundingConfig,
    SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SOUNDNESS_TOL: f64 = 1e-6;
const EMBED_TOL: f64 = 1e-9;
const RESTRICT_TOL: f64 = 1e-6;
const ROUNDS: usize = 10_000;
const DESK_RUNS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// A desk instance together with its solved relaxation and exact optimum.
struct Solved {
    index: usize,
    instance: KdstInstance,
    relaxation: Relaxation,
    opt: Option<(EdgeSetSolution, f64)>,
}

fn desk_solved(count: usize) -> Vec<Solved> {
    (0..count)
        .into_par_iter()
        .map(|index| {
            let instance = desk_suite_instance(index);
            let relaxation = solve_relaxation(&instance, &RoundingConfig::default()).expect("desk relaxation solves");
            let opt = exact_opt(&instance, &ExactConfig::default())
                .expect("desk instance is feasible")
                .map(|r| (r.solution, r.cost));
            Solved {
                index,
                instance,
                relaxation,
                opt,
            }
        })
        .collect()
}

fn rel_le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * b.abs().max(1.0)
}

fn criterion_1(suite: &[Solved]) -> Outcome {
    let with_opt: Vec<&Solved> = suite.iter().filter(|s| s.opt.is_some()).take(100).collect();
    let mut failures = Vec::new();
    let mut witness_failures = 0;
    for s in &with_opt {
        let (opt_set, opt) = s.opt.as_ref().unwrap();
        let star = s.relaxation.lp_value();
        if !rel_le(star, *opt, SOUNDNESS_TOL) {
            failures.push(format!("#{} LP*={} > OPT={}", s.index, star, opt));
        }
        let paths = enumerate_paths(&s.instance).unwrap();
        let plain = solve(&build_lp_kdst(&s.instance, &paths).unwrap().lp, &SolverConfig::default()).unwrap();
        if !rel_le(plain.objective_value, star, SOUNDNESS_TOL) {
            failures.push(format!("#{} LP={} > LP*={}", s.index, plain.objective_value, star));
        }
        // The optimum itself, as a 0/1 point, must satisfy the program.
        match relaxation_witness(&s.relaxation.kdst, &paths, &s.instance, opt_set) {
            Ok(values) if s.relaxation.kdst.lp.max_violation(&values) <= 1e-9 => {}
            _ => witness_failures += 1,
        }
    }
    let gaps = with_opt
        .iter()
        .filter(|s| s.relaxation.lp_value() < s.opt.as_ref().unwrap().1 - SOUNDNESS_TOL)
        .count();
    let fractional = with_opt
        .iter()
        .filter(|s| s.relaxation.x_hat.iter().any(|&x| x > 1e-9 && x < 1.0 - 1e-9))
        .count();
    let pass = with_opt.len() == 100 && failures.is_empty() && witness_failures == 0;
    outcome(
        pass,
        format!(
            "{} instances with exact OPT ({} with LP* < OPT, {} fractional), {} bound violations, {} witness violations{}",
            with_opt.len(),
            gaps,
            fractional,
            failures.len(),
            witness_failures,
            failures.first().map(|f| format!(" (first: {})", f)).unwrap_or_default()
        ),
    )
}

fn criterion_2(suite: &[Solved]) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = 0;
    let mut increased = 0;
    for s in suite {
        let d = s.instance.depth_bound;
        assert!(d == 2 || d == 3);
        let tree = &s.relaxation.tree;
        let embedded = s.relaxation.embedded.cost(tree);
        let bound = (s.instance.k as f64).powi(d as i32 - 2) * s.relaxation.lp_value();
        if !rel_le(embedded, bound, EMBED_TOL) {
            bad += 1;
        }
        if bound > 0.0 {
            worst = worst.max(embedded / bound);
        }
        if tree.cost_of(&s.relaxation.x_hat) > embedded + EMBED_TOL * embedded.max(1.0) {
            increased += 1;
        }
    }
    outcome(
        bad == 0 && increased == 0,
        format!(
            "{} instances, max cost(x̂)/(k^(D-2)·LP) = {:.6}, {} bound violations, {} monotonize increases",
            suite.len(),
            worst,
            bad,
            increased
        ),
    )
}

fn subsets(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for e in start..m {
            cur.push(e);
            go(e + 1, m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, size, &mut Vec::new(), &mut out);
    out
}

fn criterion_3(suite: &[Solved]) -> Outcome {
    let chosen: Vec<&Solved> = suite.iter().filter(|s| s.instance.k >= 2).take(20).collect();
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    for s in &chosen {
        let relax = &s.relaxation;
        let m = s.instance.graph.edge_count();
        // Every F of size k - 1; exhaustive for all suite instances.
        for f in subsets(m, s.instance.k - 1) {
            let removed: BTreeSet<usize> = f.into_iter().collect();
            for i in 0..s.instance.terminals.len() {
                let surviving: f64 = relax
                    .kdst
                    .flow_values(&relax.solution, i)
                    .filter(|&(p, _)| !relax.paths.edges(p).iter().any(|e| removed.contains(e)))
                    .map(|(_, v)| v)
                    .sum();
                worst = worst.min(surviving);
                checked += 1;
            }
        }
    }
    outcome(
        chosen.len() == 20 && worst >= 1.0 - RESTRICT_TOL,
        format!(
            "{} instances, {} (F, terminal) pairs, min surviving flow {:.9}",
            chosen.len(),
            checked,
            worst
        ),
    )
}

/// Selection frequencies and mean mapped cost over `ROUNDS` rounds.
fn marginals(tree: &GstTree, x_hat: &[f64], graph: &DirectedGraph, seed: u64) -> (Vec<f64>, f64) {
    let mut hits = vec![0usize; tree.edge_count()];
    let mut total_cost = 0.0;
    for i in 0..ROUNDS {
        let mut rng = iteration_rng(seed, 0, i);
        let selected = gkr_round(tree, x_hat, &mut rng);
        let mut edges = BTreeSet::new();
        for &t in &selected {
            hits[t] += 1;
            edges.insert(tree.edge_origin(t));
        }
        total_cost += edges.iter().map(|&e| graph.edge(e).cost).sum::<f64>();
    }
    let freq = hits.iter().map(|&h| h as f64 / ROUNDS as f64).collect();
    (freq, total_cost / ROUNDS as f64)
}

fn criterion_4(suite: &[Solved]) -> Outcome {
    let mut cases: Vec<(String, KdstInstance, GstTree, Vec<f64>)> = Vec::new();
    let diamond = generate(&GeneratorSpec::DiamondFamily { width: 2, k: 2 }, 0)
        .unwrap()
        .rooted()
        .unwrap();
    let paths = enumerate_paths(&diamond).unwrap();
    let tree = build_gst_tree(&paths, &diamond).unwrap();
    let half = vec![0.5; tree.edge_count()];
    cases.push(("diamond".into(), diamond, tree, half));
    // Fractional trees first; integral ones are deterministic under rounding.
    let fractional = |s: &&Solved| s.relaxation.x_hat.iter().any(|&x| x > 1e-9 && x < 1.0 - 1e-9);
    let picked = suite
        .iter()
        .filter(fractional)
        .chain(suite.iter().filter(|s| !fractional(s)))
        .take(5);
    for s in picked {
        cases.push((
            format!("desk#{}", s.index),
            s.instance.clone(),
            s.relaxation.tree.clone(),
            s.relaxation.x_hat.clone(),
        ));
    }
    let mut lines = Vec::new();
    let mut pass = true;
    for (case_no, (name, inst, tree, x)) in cases.iter().enumerate() {
        let (freq, mean_cost) = marginals(tree, x, &inst.graph, 4000 + case_no as u64);
        let mut over = 0;
        for (t, &f) in freq.iter().enumerate() {
            let sigma = (x[t] * (1.0 - x[t]) / ROUNDS as f64).sqrt();
            if f > x[t] + 3.0 * sigma {
                over += 1;
            }
        }
        let expected = tree.cost_of(x);
        let cost_ok = mean_cost <= 1.05 * expected;
        pass &= over == 0 && cost_ok;
        lines.push(format!(
            "{}: {} edges, {} above 3σ, mean cost {:.4} vs cost(x̂) {:.4}",
            name,
            tree.edge_count(),
            over,
            mean_cost,
            expected
        ));
    }
    outcome(pass, lines.join("; "))
}

struct DeskRun {
    index: usize,
    feasible: bool,
    attempts: usize,
    cost: f64,
    bound: f64,
    opt: Option<f64>,
    n: usize,
    h: EdgeSetSolution,
}

fn desk_runs(suite: &[Solved]) -> Vec<DeskRun> {
    suite
        .par_iter()
        .take(DESK_RUNS)
        .map(|s| {
            let config = RoundingConfig {
                rng_seed: s.index as u64,
                repeat_constant: 2.0,
                max_restarts: 20,
                keep_rounds: false,
                ..RoundingConfig::default()
            };
            let inst = &s.instance;
            let n_rounds = iterations_kdst(inst.graph.vertex_count(), inst.k, inst.depth_bound, 2.0);
            let bound =
                n_rounds as f64 * (inst.k as f64).powi(inst.depth_bound as i32 - 2) * s.relaxation.lp_value();
            match round_relaxation(inst, &s.relaxation, n_rounds, &config) {
                Ok((h, transcript)) => DeskRun {
                    index: s.index,
                    feasible: verify(&h, inst).feasible,
                    attempts: transcript.attempts.len(),
                    cost: h.cost(&inst.graph),
                    bound,
                    opt: s.opt.as_ref().map(|o| o.1),
                    n: inst.graph.vertex_count(),
                    h,
                },
                Err(_) => DeskRun {
                    index: s.index,
                    feasible: false,
                    attempts: config.max_restarts,
                    cost: f64::INFINITY,
                    bound,
                    opt: None,
                    n: inst.graph.vertex_count(),
                    h: EdgeSetSolution::default(),
                },
            }
        })
        .collect()
}

fn criterion_5(runs: &[DeskRun]) -> Outcome {
    let feasible = runs.iter().filter(|r| r.feasible).count();
    let attempts: usize = runs.iter().map(|r| r.attempts).sum();
    let rate = feasible as f64 / attempts as f64;
    // Strictest floor over the suite.
    let min_n = runs.iter().map(|r| r.n).min().unwrap_or(1);
    let floor = 1.0 / min_n as f64;
    outcome(
        runs.len() == DESK_RUNS && feasible == runs.len() && rate > floor,
        format!(
            "{}/{} runs feasible, {} attempts, per-attempt success rate {:.4} (floor 1/n = {:.4})",
            feasible,
            runs.len(),
            attempts,
            rate,
            floor
        ),
    )
}

fn criterion_6(runs: &[DeskRun]) -> Outcome {
    let over: Vec<usize> = runs
        .iter()
        .filter(|r| !(r.cost <= r.bound * (1.0 + 1e-9)))
        .map(|r| r.index)
        .collect();
    let ratios: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.opt.filter(|&o| o > 0.0).map(|o| r.cost / o))
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let max_bound_use = runs
        .iter()
        .map(|r| r.cost / r.bound)
        .fold(0.0, f64::max);
    outcome(
        over.is_empty(),
        format!(
            "{} runs over bound, max cost/bound {:.4}, mean cost/OPT {:.4}, max cost/OPT {:.4}",
            over.len(),
            max_bound_use,
            mean,
            max
        ),
    )
}

fn criterion_7(suite: &[Solved], runs: &[DeskRun]) -> Outcome {
    // Full graphs and algorithm outputs of the 100 desk instances.
    let mut inputs: Vec<(&KdstInstance, EdgeSetSolution)> = Vec::new();
    for s in suite.iter().take(100) {
        inputs.push((&s.instance, EdgeSetSolution::all(&s.instance.graph)));
    }
    for r in runs.iter().filter(|r| r.feasible) {
        inputs.push((&suite[r.index].instance, r.h.clone()));
    }
    let results: Vec<(usize, usize, bool)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, (inst, sol))| {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + i as u64);
            let minimal = minimalize(sol, inst, &mut rng).expect("inputs are feasible");
            let report = check_minimal_lemmas(&minimal, inst);
            let cheaper = minimal.cost(&inst.graph) <= sol.cost(&inst.graph);
            (report.violations.len(), report.vertices_checked + report.edges_checked, cheaper && verify(&minimal, inst).feasible)
        })
        .collect();
    let violations: usize = results.iter().map(|r| r.0).sum();
    let checks: usize = results.iter().map(|r| r.1).sum();
    let well_formed = results.iter().all(|r| r.2);
    outcome(
        results.len() >= 200 && violations == 0 && well_formed,
        format!(
            "{} minimalized solutions, {} vertex/edge checks, {} violations",
            results.len(),
            checks,
            violations
        ),
    )
}

fn exhaustive_cut(graph: &DirectedGraph, s: usize, t: usize) -> usize {
    let n = graph.vertex_count();
    let mut best = usize::MAX;
    for mask in 0u32..(1 << n) {
        if mask >> s & 1 == 0 || mask >> t & 1 == 1 {
            continue;
        }
        let cut = graph
            .edges()
            .iter()
            .filter(|e| mask >> e.tail & 1 == 1 && mask >> e.head & 1 == 0)
            .count();
        best = best.min(cut);
    }
    best
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    let mut values = Vec::new();
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let p = rng.gen_range(0.1..0.6);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen::<f64>() < p {
                    edges.push(Edge { tail: u, head: v, cost: 1.0 });
                }
            }
        }
        let g = DirectedGraph::new(n, edges).unwrap();
        let s = rng.gen_range(0..n);
        let t = (s + rng.gen_range(1..n)) % n;
        let flow = max_flow_value(&g, &EdgeSetSolution::all(&g), s, t);
        let cut = exhaustive_cut(&g, s, t);
        values.push(flow);
        if flow != cut {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!(
            "50 digraphs, {} mismatches, max flow values ranged {}..={}",
            mismatches,
            values.iter().min().unwrap(),
            values.iter().max().unwrap()
        ),
    )
}

fn criterion_9(suite: &[Solved]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for s in suite {
        let Some((_, opt)) = &s.opt else { continue };
        let base = baseline_t_approx(&s.instance).unwrap().cost(&s.instance.graph);
        let h = s.instance.terminal_count() as f64;
        checked += 1;
        if !(*opt <= base && base <= h * opt) {
            bad.push(s.index);
        }
    }
    outcome(
        checked > 0 && bad.is_empty(),
        format!("{} instances, {} sandwich violations", checked, bad.len()),
    )
}

fn criterion_10() -> Outcome {
    let spec = GeneratorSpec::StrongDigraph {
        n: 8,
        k: 2,
        extra_prob: 0.1,
        terminals: 3,
        cost_min: 1.0,
        cost_max: 10.0,
        depth_bound: None,
    };
    let results: Vec<(bool, bool, String)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let GeneratedInstance::Subgraph(inst) = generate(&spec, seed).unwrap() else {
                unreachable!()
            };
            let config = RoundingConfig {
                rng_seed: seed,
                keep_rounds: false,
                ..RoundingConfig::default()
            };
            match run_steiner_subgraph(&inst, &config) {
                Ok(run) => {
                    let report = verify_subgraph(&run.solution, &inst);
                    let n = inst.graph.vertex_count();
                    let per_run = |lp: f64| {
                        iterations_kdst(n, inst.k, inst.depth_bound, 2.0) as f64
                            * (inst.k as f64).powi(inst.depth_bound as i32 - 2)
                            * lp
                    };
                    let bound = per_run(run.out_lp_value) + per_run(run.in_lp_value);
                    (report.feasible, report.cost <= bound, String::new())
                }
                Err(e) => (false, false, e.to_string()),
            }
        })
        .collect();
    let feasible = results.iter().filter(|r| r.0).count();
    let within = results.iter().filter(|r| r.1).count();
    let err = results.iter().find(|r| !r.2.is_empty()).map(|r| r.2.clone());
    outcome(
        feasible == 20 && within == 20,
        format!(
            "20 seeds, {} with all ordered pairs λ ≥ 2, {} within cost bound{}",
            feasible,
            within,
            err.map(|e| format!(", error: {}", e)).unwrap_or_default()
        ),
    )
}

fn criterion_11() -> Outcome {
    let spec = ExperimentSpec::from_json(
        r#"{"name": "determinism",
            "generator": {"generator": "layered-dag", "n": 10, "layers": 3, "edge_prob": 0.4,
                          "cost_min": 1, "cost_max": 10, "k": 2, "terminals": 2},
            "seeds": [1, 2, 3, 4, 5, 6, 7, 8],
            "algorithms": ["kdst", "baseline", "exact"]}"#,
    )
    .unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&spec, &RoundingConfig::default(), None).unwrap())
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    let same = deterministic_part(&a.csv) == deterministic_part(&b.csv)
        && deterministic_part(&b.csv) == deterministic_part(&c.csv);
    outcome(
        same,
        format!(
            "{} rows, CSV without wall time identical across 1/4/4 threads: {}",
            a.rows.len(),
            same
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let suite = desk_solved(DESK_RUNS);
    let runs = desk_runs(&suite);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("relaxation soundness", Box::new(|| criterion_1(&suite))),
        ("embedding cost bound", Box::new(|| criterion_2(&suite))),
        ("restriction feasibility", Box::new(|| criterion_3(&suite))),
        ("rounding marginals", Box::new(|| criterion_4(&suite))),
        ("end-to-end feasibility", Box::new(|| criterion_5(&runs))),
        ("approximation bound", Box::new(|| criterion_6(&runs))),
        ("minimal-solution structure", Box::new(|| criterion_7(&suite, &runs))),
        ("max-flow oracle", Box::new(criterion_8)),
        ("baseline sandwich", Box::new(|| criterion_9(&suite))),
        ("steiner subgraph wrapper", Box::new(criterion_10)),
        ("experiment determinism", Box::new(criterion_11)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {} [{:.1}s] {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
