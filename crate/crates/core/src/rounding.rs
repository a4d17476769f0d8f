//! Randomized rounding on the suffix tree and the full algorithm loop.
//!
//! Every rounding iteration draws from its own ChaCha stream keyed by
//! `(seed, attempt, iteration)`, so results do not depend on how rayon
//! schedules the iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeSetSolution, KdstInstance, SubgraphInstance};
use crate::lp::{
    build_lp_kdst_star_capped, embed_solution, GstPoint, KdstLp, LpSolution, LpStatus,
    DEFAULT_CONSTRAINT_CAP,
};
use crate::paths::{
    build_gst_tree, enumerate_paths_capped, map_tree_edges_to_graph, GstTree, PathSpace,
    TreeEdgeId, DEFAULT_PATH_CAP,
};
use crate::simplex::{solve_with_stats, SolverConfig};
use crate::verify::{check_instance_feasible, verify};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundingConfig {
    pub rng_seed: u64,
    /// Fixed number of rounding iterations instead of the default formula.
    pub iteration_override: Option<usize>,
    /// `c` in `N = ceil(c · D · k · log₂ n)`.
    pub repeat_constant: f64,
    /// Attempts (each a fresh batch of `N` rounds) before giving up.
    pub max_restarts: usize,
    pub path_cap: usize,
    pub constraint_cap: usize,
    pub solver: SolverConfig,
    /// Keep every round of the final attempt in the transcript.
    pub keep_rounds: bool,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            iteration_override: None,
            repeat_constant: 2.0,
            max_restarts: 20,
            path_cap: DEFAULT_PATH_CAP,
            constraint_cap: DEFAULT_CONSTRAINT_CAP,
            solver: SolverConfig::default(),
            keep_rounds: true,
        }
    }
}

impl RoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.repeat_constant > 0.0 && self.repeat_constant.is_finite()) {
            return Err(Error::Config(format!(
                "repeat constant must be positive, got {}",
                self.repeat_constant
            )));
        }
        if self.max_restarts == 0 {
            return Err(Error::Config("max_restarts must be at least 1".into()));
        }
        if self.iteration_override == Some(0) {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        Ok(())
    }
}

/// `max(1, ceil(c · D · k · log₂ n))`.
pub fn iterations_kdst(n: usize, k: usize, depth_bound: usize, c: f64) -> usize {
    let raw = c * depth_bound as f64 * k as f64 * (n.max(1) as f64).log2();
    (raw.ceil() as usize).max(1)
}

/// `max(1, ceil(c · D · log₂(h + 1)))`, the count used when `k = 1`.
pub fn iterations_dst(h: usize, depth_bound: usize, c: f64) -> usize {
    let raw = c * depth_bound as f64 * ((h + 1) as f64).log2();
    (raw.ceil() as usize).max(1)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Private stream of one rounding iteration.
pub fn iteration_rng(seed: u64, attempt: usize, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed) ^ mix(attempt as u64 ^ 0x5eed));
    rng.set_stream(iteration as u64);
    rng
}

/// `x'_t = min(x_t, x'_parent(t))`, so that child values never exceed their
/// parent's.
pub fn monotonize(tree: &GstTree, x_hat: &[f64]) -> Vec<f64> {
    let mut out = x_hat.to_vec();
    // Parents precede children in tree-edge order.
    for t in 0..tree.edge_count() {
        if let Some(p) = tree.parent_edge(t) {
            out[t] = out[t].min(out[p]);
        }
    }
    out
}

/// One round of GKR rounding: edge `t` is marked with probability
/// `x_t / x_parent(t)` (`x_t` below the root, 0 under a zero parent) and
/// selected when it and all its ancestors are marked. Returns the selected
/// edges in increasing order. Expects monotone `x_hat`.
pub fn gkr_round<R: Rng + ?Sized>(tree: &GstTree, x_hat: &[f64], rng: &mut R) -> Vec<TreeEdgeId> {
    let m = tree.edge_count();
    let mut selected = vec![false; m];
    let mut out = Vec::new();
    for t in 0..m {
        let (prob, parent_ok) = match tree.parent_edge(t) {
            None => (x_hat[t], true),
            Some(p) => {
                let prob = if x_hat[p] > 0.0 { (x_hat[t] / x_hat[p]).min(1.0) } else { 0.0 };
                (prob, selected[p])
            }
        };
        // Draw for every edge so the stream position does not depend on
        // earlier outcomes.
        let marked = rng.gen::<f64>() < prob;
        if marked && parent_ok {
            selected[t] = true;
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub iteration: usize,
    pub tree_edges: Vec<TreeEdgeId>,
    pub graph_edges: Vec<EdgeId>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: usize,
    pub union_cost: f64,
    pub min_lambda: usize,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingTranscript {
    pub seed: u64,
    pub iterations: usize,
    pub path_count: usize,
    pub lp_value: f64,
    /// Cost of the embedded point before and after monotonization.
    pub embedded_cost: f64,
    pub monotone_cost: f64,
    pub attempts: Vec<AttemptRecord>,
    /// Rounds of the final attempt.
    pub rounds: Vec<RoundRecord>,
    pub union_edges: Vec<EdgeId>,
    pub union_cost: f64,
    pub feasible: bool,
    pub restarts: usize,
}

impl RoundingTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Everything computed before rounding starts: path space, tree, solved LP
/// and the embedded point.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub paths: PathSpace,
    pub tree: GstTree,
    pub kdst: KdstLp,
    pub solution: LpSolution,
    pub simplex_iterations: usize,
    /// Embedded point before monotonization.
    pub embedded: GstPoint,
    /// Monotone `x̂` used by the rounding.
    pub x_hat: Vec<f64>,
}

impl Relaxation {
    pub fn lp_value(&self) -> f64 {
        self.solution.objective_value
    }
}

fn build_model(instance: &KdstInstance, config: &RoundingConfig) -> Result<(PathSpace, GstTree, KdstLp)> {
    let paths = enumerate_paths_capped(instance, config.path_cap)?;
    let tree = build_gst_tree(&paths, instance)?;
    let kdst = build_lp_kdst_star_capped(instance, &paths, config.constraint_cap)?;
    Ok((paths, tree, kdst))
}

fn finish_relaxation(
    paths: PathSpace,
    tree: GstTree,
    kdst: KdstLp,
    solution: LpSolution,
    simplex_iterations: usize,
) -> Result<Relaxation> {
    let embedded = embed_solution(&kdst, &solution, &tree)?;
    let x_hat = monotonize(&tree, &embedded.x_hat);
    Ok(Relaxation {
        paths,
        tree,
        kdst,
        solution,
        simplex_iterations,
        embedded,
        x_hat,
    })
}

/// Enumerates paths, builds the tree and the strengthened LP, solves it and
/// embeds the solution.
pub fn solve_relaxation(instance: &KdstInstance, config: &RoundingConfig) -> Result<Relaxation> {
    config.validate()?;
    check_instance_feasible(instance)?;
    let (paths, tree, kdst) = build_model(instance, config)?;
    let (solution, stats) = solve_with_stats(&kdst.lp, &config.solver)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpInfeasible),
        LpStatus::Unbounded => return Err(Error::LpUnbounded),
    }
    finish_relaxation(paths, tree, kdst, solution, stats.iterations)
}

/// Rebuilds the model and takes `solution` as its LP optimum, e.g. one read
/// back from a file.
pub fn relaxation_from_solution(
    instance: &KdstInstance,
    solution: LpSolution,
    config: &RoundingConfig,
) -> Result<Relaxation> {
    config.validate()?;
    let (paths, tree, kdst) = build_model(instance, config)?;
    if solution.values.len() != kdst.lp.num_vars() {
        return Err(Error::Config(format!(
            "LP solution has {} values, the program has {} variables",
            solution.values.len(),
            kdst.lp.num_vars()
        )));
    }
    finish_relaxation(paths, tree, kdst, solution, 0)
}

/// Runs up to `max_restarts` attempts of `iterations` rounds each on a solved
/// relaxation, returning the first feasible union.
pub fn round_relaxation(
    instance: &KdstInstance,
    relaxation: &Relaxation,
    iterations: usize,
    config: &RoundingConfig,
) -> Result<(EdgeSetSolution, RoundingTranscript)> {
    config.validate()?;
    let tree = &relaxation.tree;
    let g = &instance.graph;
    let mut transcript = RoundingTranscript {
        seed: config.rng_seed,
        iterations,
        path_count: relaxation.paths.len(),
        lp_value: relaxation.lp_value(),
        embedded_cost: relaxation.embedded.cost(tree),
        monotone_cost: tree.cost_of(&relaxation.x_hat),
        attempts: Vec::new(),
        rounds: Vec::new(),
        union_edges: Vec::new(),
        union_cost: 0.0,
        feasible: false,
        restarts: 0,
    };
    for attempt in 0..config.max_restarts {
        let rounds: Vec<RoundRecord> = (0..iterations)
            .into_par_iter()
            .map(|i| {
                let mut rng = iteration_rng(config.rng_seed, attempt, i);
                let tree_edges = gkr_round(tree, &relaxation.x_hat, &mut rng);
                let mapped = map_tree_edges_to_graph(tree_edges.iter().copied(), tree);
                RoundRecord {
                    iteration: i,
                    cost: mapped.cost(g),
                    graph_edges: mapped.edges.into_iter().collect(),
                    tree_edges,
                }
            })
            .collect();
        let mut union = EdgeSetSolution::default();
        for r in &rounds {
            union.edges.extend(r.graph_edges.iter().copied());
        }
        let report = verify(&union, instance);
        transcript.attempts.push(AttemptRecord {
            attempt,
            union_cost: report.cost,
            min_lambda: report.min_lambda(),
            feasible: report.feasible,
        });
        if report.feasible {
            transcript.restarts = attempt;
            transcript.union_edges = union.edges.iter().copied().collect();
            transcript.union_cost = report.cost;
            transcript.feasible = true;
            if config.keep_rounds {
                transcript.rounds = rounds;
            }
            return Ok((union, transcript));
        }
    }
    Err(Error::RestartsExhausted {
        attempts: config.max_restarts,
    })
}

fn iteration_count(config: &RoundingConfig, default: usize) -> usize {
    config.iteration_override.unwrap_or(default)
}

/// The full algorithm for k-DST with `N = ceil(c · D · k · log₂ n)` rounds per
/// attempt.
pub fn run_algorithm_kdst(
    instance: &KdstInstance,
    config: &RoundingConfig,
) -> Result<(EdgeSetSolution, RoundingTranscript)> {
    let relaxation = solve_relaxation(instance, config)?;
    let n = iteration_count(
        config,
        iterations_kdst(
            instance.graph.vertex_count(),
            instance.k,
            instance.depth_bound,
            config.repeat_constant,
        ),
    );
    round_relaxation(instance, &relaxation, n, config)
}

/// The `k = 1` specialization with `N = ceil(c · D · log₂(h + 1))` rounds.
pub fn run_algorithm_dst(
    instance: &KdstInstance,
    config: &RoundingConfig,
) -> Result<(EdgeSetSolution, RoundingTranscript)> {
    if instance.k != 1 {
        return Err(Error::Config(format!(
            "the directed Steiner tree variant needs k = 1, got {}",
            instance.k
        )));
    }
    let relaxation = solve_relaxation(instance, config)?;
    let n = iteration_count(
        config,
        iterations_dst(instance.terminal_count(), instance.depth_bound, config.repeat_constant),
    );
    round_relaxation(instance, &relaxation, n, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphRun {
    pub solution: EdgeSetSolution,
    /// Run rooted at the first terminal, towards the others.
    pub out_transcript: RoundingTranscript,
    /// Run on the reversed graph, i.e. from the others into the first terminal.
    pub in_transcript: RoundingTranscript,
    pub out_lp_value: f64,
    pub in_lp_value: f64,
}

/// k-edge-connected Steiner subgraph: roots the problem at the first terminal
/// and takes the union of an out-solution and an in-solution (the latter
/// computed on the reversed graph).
pub fn run_steiner_subgraph(instance: &SubgraphInstance, config: &RoundingConfig) -> Result<SubgraphRun> {
    let root = instance.terminals[0];
    let others = instance.terminals[1..].to_vec();
    let g = &instance.graph;

    let (out_inst, out_origin) =
        KdstInstance::with_root_in_edges_dropped(g, root, others.clone(), instance.k, instance.depth_bound)?;
    let (out_sol, out_transcript) = run_algorithm_kdst(&out_inst, config)?;

    let (reversed, rev_origin) = g.reversed();
    let (in_inst, in_origin) =
        KdstInstance::with_root_in_edges_dropped(&reversed, root, others, instance.k, instance.depth_bound)?;
    let in_config = RoundingConfig {
        rng_seed: mix(config.rng_seed ^ 0x1f),
        ..config.clone()
    };
    let (in_sol, in_transcript) = run_algorithm_kdst(&in_inst, &in_config)?;

    let mut solution = EdgeSetSolution::default();
    solution.edges.extend(out_sol.edges.iter().map(|&e| out_origin[e]));
    solution
        .edges
        .extend(in_sol.edges.iter().map(|&e| rev_origin[in_origin[e]]));
    Ok(SubgraphRun {
        solution,
        out_lp_value: out_transcript.lp_value,
        in_lp_value: in_transcript.lp_value,
        out_transcript,
        in_transcript,
    })
}
