//! Ground truth for the algorithm: connectivity verification, minimal
//! solutions and their structural properties, an exact branch-and-bound
//! optimum and the per-terminal min-cost-flow baseline.

mod exact;
mod flow;
mod lemmas;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, EdgeSetSolution, KdstInstance, SubgraphInstance, VertexId};

pub use exact::{exact_opt, ExactConfig, ExactResult};
pub use flow::{edge_disjoint_paths, max_flow_filtered, min_cost_k_flow};
pub use lemmas::{
    check_minimal_lemmas, is_d_shallow, relaxation_witness, LemmaReport, LemmaViolation,
    SHALLOW_EDGE_LIMIT,
};

/// Maximum number of edge-disjoint `source → sink` paths inside `edges`.
pub fn max_flow_value(
    graph: &DirectedGraph,
    edges: &EdgeSetSolution,
    source: VertexId,
    sink: VertexId,
) -> usize {
    max_flow_filtered(graph, |e| edges.contains(e), source, sink)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub terminals: Vec<VertexId>,
    /// `λ(r, t_i)` in the solution, aligned with `terminals`.
    pub lambda: Vec<usize>,
    pub k: usize,
    pub feasible: bool,
    pub cost: f64,
    pub edge_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_lp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_opt: Option<f64>,
}

impl VerificationReport {
    pub fn min_lambda(&self) -> usize {
        self.lambda.iter().copied().min().unwrap_or(usize::MAX)
    }

    pub fn with_lp_value(mut self, lp: f64) -> Self {
        self.ratio_lp = ratio(self.cost, lp);
        self
    }

    pub fn with_opt(mut self, opt: f64) -> Self {
        self.ratio_opt = ratio(self.cost, opt);
        self
    }

    /// First terminal whose connectivity falls short of `k`.
    pub fn first_violation(&self) -> Option<(VertexId, usize)> {
        self.terminals
            .iter()
            .zip(&self.lambda)
            .find(|&(_, &l)| l < self.k)
            .map(|(&t, &l)| (t, l))
    }
}

fn ratio(cost: f64, reference: f64) -> Option<f64> {
    if reference > 0.0 {
        Some(cost / reference)
    } else if cost == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

pub fn verify(solution: &EdgeSetSolution, instance: &KdstInstance) -> VerificationReport {
    let g = &instance.graph;
    let lambda: Vec<usize> = instance
        .terminals
        .iter()
        .map(|&t| max_flow_value(g, solution, instance.root, t))
        .collect();
    VerificationReport {
        terminals: instance.terminals.clone(),
        feasible: lambda.iter().all(|&l| l >= instance.k),
        lambda,
        k: instance.k,
        cost: solution.cost(g),
        edge_count: solution.len(),
        ratio_lp: None,
        ratio_opt: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConnectivity {
    pub source: VertexId,
    pub sink: VertexId,
    pub lambda: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphReport {
    pub pairs: Vec<PairConnectivity>,
    pub k: usize,
    pub feasible: bool,
    pub cost: f64,
}

/// Connectivity of every ordered terminal pair.
pub fn verify_subgraph(solution: &EdgeSetSolution, instance: &SubgraphInstance) -> SubgraphReport {
    let g = &instance.graph;
    let mut pairs = Vec::new();
    for &s in &instance.terminals {
        for &t in &instance.terminals {
            if s != t {
                pairs.push(PairConnectivity {
                    source: s,
                    sink: t,
                    lambda: max_flow_value(g, solution, s, t),
                });
            }
        }
    }
    SubgraphReport {
        feasible: pairs.iter().all(|p| p.lambda >= instance.k),
        pairs,
        k: instance.k,
        cost: solution.cost(g),
    }
}

fn feasible_without(instance: &KdstInstance, edges: &EdgeSetSolution, dropped: EdgeId) -> bool {
    instance.terminals.iter().all(|&t| {
        let keep = |e: EdgeId| e != dropped && edges.contains(e);
        max_flow_filtered(&instance.graph, keep, instance.root, t) >= instance.k
    })
}

/// Removes edges in random order as long as the solution stays feasible.
/// Feasibility is monotone under adding edges, so one pass leaves an
/// inclusion-minimal solution.
pub fn minimalize<R: Rng + ?Sized>(
    solution: &EdgeSetSolution,
    instance: &KdstInstance,
    rng: &mut R,
) -> Result<EdgeSetSolution> {
    let report = verify(solution, instance);
    if let Some((terminal, lambda)) = report.first_violation() {
        return Err(Error::Infeasible {
            terminal,
            lambda,
            k: instance.k,
        });
    }
    let mut current = solution.clone();
    let mut order: Vec<EdgeId> = solution.edges.iter().copied().collect();
    order.shuffle(rng);
    for e in order {
        if feasible_without(instance, &current, e) {
            current.edges.remove(&e);
        }
    }
    Ok(current)
}

/// Union over terminals of a cheapest integral `k`-flow from the root.
pub fn baseline_t_approx(instance: &KdstInstance) -> Result<EdgeSetSolution> {
    let g = &instance.graph;
    let mut union = EdgeSetSolution::default();
    for &t in &instance.terminals {
        match min_cost_k_flow(g, |e| Some(g.edge(e).cost), instance.root, t, instance.k) {
            Some((_, support)) => union.edges.extend(support),
            None => {
                return Err(Error::Infeasible {
                    terminal: t,
                    lambda: max_flow_filtered(g, |_| true, instance.root, t),
                    k: instance.k,
                })
            }
        }
    }
    Ok(union)
}

/// Checks `λ_G(r, t) ≥ k` for every terminal of the full graph.
pub fn check_instance_feasible(instance: &KdstInstance) -> Result<()> {
    let all = EdgeSetSolution::all(&instance.graph);
    match verify(&all, instance).first_violation() {
        Some((terminal, lambda)) => Err(Error::Infeasible {
            terminal,
            lambda,
            k: instance.k,
        }),
        None => Ok(()),
    }
}
