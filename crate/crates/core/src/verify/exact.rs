//! Exact optimum by branch-and-bound over edge subsets.
//!
//! Edges are decided in `(cost, id)` order, include branch first. A node is
//! bounded below by the cost of its included edges plus, for the worst
//! terminal, a cheapest `k`-flow in which included edges are free and excluded
//! edges are gone. The same flows yield a feasible completion, which keeps the
//! incumbent tight.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeSetSolution, KdstInstance};
use crate::verify::{baseline_t_approx, check_instance_feasible, max_flow_filtered, min_cost_k_flow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    /// Refuse instances with more edges than this.
    pub max_edges: usize,
    /// Search nodes before giving up.
    pub node_budget: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_edges: 24,
            node_budget: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub solution: EdgeSetSolution,
    pub cost: f64,
    pub nodes: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Decision {
    Open,
    In,
    Out,
}

struct Search<'a> {
    instance: &'a KdstInstance,
    order: Vec<EdgeId>,
    decision: Vec<Decision>,
    best: EdgeSetSolution,
    best_cost: f64,
    nodes: usize,
    budget: usize,
    exhausted: bool,
}

impl Search<'_> {
    fn tolerance(&self) -> f64 {
        1e-9 * self.best_cost.abs().max(1.0)
    }

    fn offer(&mut self, candidate: EdgeSetSolution, cost: f64) {
        let tol = self.tolerance();
        let better = if cost < self.best_cost - tol {
            true
        } else if cost > self.best_cost + tol {
            false
        } else {
            candidate.edges.iter().cmp(self.best.edges.iter()) == Ordering::Less
        };
        if better {
            self.best = candidate;
            self.best_cost = cost;
        }
    }

    fn included(&self) -> EdgeSetSolution {
        EdgeSetSolution {
            edges: (0..self.decision.len())
                .filter(|&e| self.decision[e] == Decision::In)
                .collect(),
        }
    }

    fn visit(&mut self, depth: usize) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let inst = self.instance;
        let g = &inst.graph;
        let included = self.included();
        let base = included.cost(g);

        let included_feasible = inst.terminals.iter().all(|&t| {
            max_flow_filtered(g, |e| self.decision[e] == Decision::In, inst.root, t) >= inst.k
        });
        if included_feasible {
            // Supersets never cost less.
            self.offer(included, base);
            return;
        }

        let mut bound = 0.0f64;
        let mut completion = included.clone();
        for &t in &inst.terminals {
            let flow = min_cost_k_flow(
                g,
                |e| match self.decision[e] {
                    Decision::In => Some(0.0),
                    Decision::Open => Some(g.edge(e).cost),
                    Decision::Out => None,
                },
                inst.root,
                t,
                inst.k,
            );
            match flow {
                Some((c, support)) => {
                    bound = bound.max(c);
                    completion.edges.extend(support);
                }
                None => return,
            }
        }
        let completion_cost = completion.cost(g);
        self.offer(completion, completion_cost);
        if base + bound > self.best_cost + self.tolerance() {
            return;
        }

        let Some(pos) = (depth..self.order.len()).find(|&i| self.decision[self.order[i]] == Decision::Open) else {
            return;
        };
        let e = self.order[pos];
        self.decision[e] = Decision::In;
        self.visit(pos + 1);
        self.decision[e] = Decision::Out;
        self.visit(pos + 1);
        self.decision[e] = Decision::Open;
    }
}

/// Minimum-cost feasible edge set. Among optima the lexicographically
/// smallest sorted edge-id vector wins. Returns `Ok(None)` when the node
/// budget runs out; infeasible instances and oversized graphs are errors.
pub fn exact_opt(instance: &KdstInstance, config: &ExactConfig) -> Result<Option<ExactResult>> {
    let g = &instance.graph;
    if g.edge_count() > config.max_edges {
        return Err(Error::ExactTooLarge {
            edges: g.edge_count(),
            limit: config.max_edges,
        });
    }
    check_instance_feasible(instance)?;
    let start = baseline_t_approx(instance)?;
    let mut order: Vec<EdgeId> = (0..g.edge_count()).collect();
    order.sort_by(|&a, &b| {
        g.edge(a)
            .cost
            .total_cmp(&g.edge(b).cost)
            .then(a.cmp(&b))
    });
    let mut search = Search {
        instance,
        order,
        decision: vec![Decision::Open; g.edge_count()],
        best_cost: start.cost(g),
        best: start,
        nodes: 0,
        budget: config.node_budget,
        exhausted: false,
    };
    search.visit(0);
    if search.exhausted {
        return Ok(None);
    }
    Ok(Some(ExactResult {
        cost: search.best_cost,
        solution: search.best,
        nodes: search.nodes,
    }))
}
