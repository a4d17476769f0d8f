//! Structural checks on minimal solutions, the integral witness of the
//! strengthened relaxation, and the exponential D-shallowness test.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeSetSolution, KdstInstance, VertexId};
use crate::lp::KdstLp;
use crate::paths::PathSpace;
use crate::verify::{edge_disjoint_paths, max_flow_value};

/// Largest solution [`is_d_shallow`] accepts.
pub const SHALLOW_EDGE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LemmaViolation {
    /// More than `k` edge-disjoint root paths reach `vertex`.
    ConnectivityAboveK { vertex: VertexId, lambda: usize },
    /// In-degree differs from the root connectivity.
    IndegreeMismatch { vertex: VertexId, indegree: usize, lambda: usize },
    IndegreeAboveK { vertex: VertexId, indegree: usize },
    /// Too many rooted paths of length at most `ell` end with `edge`.
    PathCount { edge: EdgeId, ell: usize, count: usize, bound: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub vertices_checked: usize,
    pub edges_checked: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Counts simple rooted paths inside `h` by length and last edge, up to
/// length `max_len`. Entry `[e][l]` is the number of paths of length exactly
/// `l` ending with `e`.
fn rooted_path_counts(instance: &KdstInstance, h: &EdgeSetSolution, max_len: usize) -> HashMap<EdgeId, Vec<usize>> {
    let g = &instance.graph;
    let mut counts: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    let mut on_path = vec![false; g.vertex_count()];
    fn walk(
        v: VertexId,
        len: usize,
        max_len: usize,
        instance: &KdstInstance,
        h: &EdgeSetSolution,
        on_path: &mut [bool],
        counts: &mut HashMap<EdgeId, Vec<usize>>,
    ) {
        if len == max_len {
            return;
        }
        on_path[v] = true;
        for &e in instance.graph.out_edges(v) {
            let w = instance.graph.edge(e).head;
            if !h.contains(e) || on_path[w] {
                continue;
            }
            counts.entry(e).or_insert_with(|| vec![0; max_len + 1])[len + 1] += 1;
            walk(w, len + 1, max_len, instance, h, on_path, counts);
        }
        on_path[v] = false;
    }
    walk(instance.root, 0, max_len, instance, h, &mut on_path, &mut counts);
    counts
}

/// Checks the properties every inclusion-minimal feasible solution `h` must
/// have: for each vertex `v ≠ r` it touches, `λ_H(r, v) ≤ k`,
/// `indeg_H(v) = λ_H(r, v)` and `indeg_H(v) ≤ k`; for each edge `e` of `h` and
/// `2 ≤ ℓ ≤ D`, at most `k^(ℓ−2)` rooted paths of length at most `ℓ` end
/// with `e`.
pub fn check_minimal_lemmas(h: &EdgeSetSolution, instance: &KdstInstance) -> LemmaReport {
    let g = &instance.graph;
    let k = instance.k;
    let mut report = LemmaReport::default();

    let mut touched = vec![false; g.vertex_count()];
    let mut indegree = vec![0usize; g.vertex_count()];
    for &e in &h.edges {
        let edge = g.edge(e);
        touched[edge.tail] = true;
        touched[edge.head] = true;
        indegree[edge.head] += 1;
    }
    for v in (0..g.vertex_count()).filter(|&v| touched[v] && v != instance.root) {
        report.vertices_checked += 1;
        let lambda = max_flow_value(g, h, instance.root, v);
        if lambda > k {
            report.violations.push(LemmaViolation::ConnectivityAboveK { vertex: v, lambda });
        }
        if indegree[v] != lambda {
            report.violations.push(LemmaViolation::IndegreeMismatch {
                vertex: v,
                indegree: indegree[v],
                lambda,
            });
        }
        if indegree[v] > k {
            report.violations.push(LemmaViolation::IndegreeAboveK {
                vertex: v,
                indegree: indegree[v],
            });
        }
    }

    let d = instance.depth_bound;
    let counts = rooted_path_counts(instance, h, d);
    for &e in &h.edges {
        report.edges_checked += 1;
        let Some(by_len) = counts.get(&e) else { continue };
        let mut cumulative = by_len.get(1).copied().unwrap_or(0);
        for ell in 2..=d {
            cumulative += by_len[ell];
            let bound = k.pow((ell - 2) as u32);
            if cumulative > bound {
                report.violations.push(LemmaViolation::PathCount {
                    edge: e,
                    ell,
                    count: cumulative,
                    bound,
                });
            }
        }
    }
    report
}

/// The 0/1 point of the strengthened program induced by a feasible solution
/// `h`: `x = 1` on `h`, `y_p = 1` for every enumerated path inside `h`, and
/// for each terminal `f = 1` on `k` edge-disjoint simple paths of `h`.
///
/// Fails if `h` is infeasible or one of the chosen paths is longer than `D`.
/// Feasibility of the returned point for the aggregate rows relies on `h`
/// being minimal.
pub fn relaxation_witness(
    kdst: &KdstLp,
    paths: &PathSpace,
    instance: &KdstInstance,
    h: &EdgeSetSolution,
) -> Result<Vec<f64>> {
    let g = &instance.graph;
    let mut values = vec![0.0; kdst.lp.num_vars()];
    for &e in &h.edges {
        values[kdst.x[e]] = 1.0;
    }
    let mut inside = vec![false; paths.len()];
    if !paths.is_empty() {
        inside[0] = true;
    }
    for p in 1..paths.len() {
        let parent = paths.parent(p).expect("nonempty paths have a parent");
        inside[p] = inside[parent] && h.contains(paths.last_edge(p).unwrap());
        if inside[p] {
            if let Some(Some(j)) = kdst.prefix.get(p) {
                values[*j] = 1.0;
            }
        }
    }
    for (i, &t) in instance.terminals.iter().enumerate() {
        let routes = edge_disjoint_paths(g, |e| h.contains(e), instance.root, t, instance.k);
        if routes.len() < instance.k {
            return Err(Error::Infeasible {
                terminal: t,
                lambda: routes.len(),
                k: instance.k,
            });
        }
        let lookup: HashMap<usize, usize> = kdst.flows[i].iter().copied().collect();
        for route in routes {
            let p = paths.find(&route).ok_or_else(|| {
                Error::Config(format!(
                    "solution path to terminal {} has {} edges, more than D = {}",
                    t,
                    route.len(),
                    instance.depth_bound
                ))
            })?;
            values[lookup[&p]] = 1.0;
        }
    }
    Ok(values)
}

/// Whether every terminal has `k` edge-disjoint root paths of at most `D`
/// edges inside `h`. Exponential in `|h|`; refuses more than
/// [`SHALLOW_EDGE_LIMIT`] edges.
pub fn is_d_shallow(h: &EdgeSetSolution, instance: &KdstInstance) -> Result<bool> {
    if h.len() > SHALLOW_EDGE_LIMIT {
        return Err(Error::ExactTooLarge {
            edges: h.len(),
            limit: SHALLOW_EDGE_LIMIT,
        });
    }
    let g = &instance.graph;
    let bit: HashMap<EdgeId, u32> = h.edges.iter().enumerate().map(|(i, &e)| (e, 1u32 << i)).collect();

    fn collect(
        v: VertexId,
        target: VertexId,
        mask: u32,
        left: usize,
        g: &crate::graph::DirectedGraph,
        bit: &HashMap<EdgeId, u32>,
        seen: &mut Vec<VertexId>,
        out: &mut Vec<u32>,
    ) {
        if v == target {
            out.push(mask);
            return;
        }
        if left == 0 {
            return;
        }
        for &e in g.out_edges(v) {
            let w = g.edge(e).head;
            if let Some(&b) = bit.get(&e) {
                if !seen.contains(&w) {
                    seen.push(w);
                    collect(w, target, mask | b, left - 1, g, bit, seen, out);
                    seen.pop();
                }
            }
        }
    }

    fn pick(masks: &[u32], start: usize, used: u32, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        (start..masks.len()).any(|i| masks[i] & used == 0 && pick(masks, i + 1, used | masks[i], need - 1))
    }

    for &t in &instance.terminals {
        let mut masks = Vec::new();
        let mut seen = vec![instance.root];
        collect(instance.root, t, 0, instance.depth_bound, g, &bit, &mut seen, &mut masks);
        if !pick(&masks, 0, 0, instance.k) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{diamond, graph, path};
    use crate::lp::build_lp_kdst_star;
    use crate::paths::enumerate_paths;

    #[test]
    fn diamond_and_path_pass() {
        let d = diamond(2);
        let report = check_minimal_lemmas(&EdgeSetSolution::all(&d.graph), &d);
        assert!(report.passed(), "{:?}", report.violations);
        assert_eq!(report.vertices_checked, 3);

        let p = path(2.0, 3.0, 2);
        assert!(check_minimal_lemmas(&EdgeSetSolution::all(&p.graph), &p).passed());
    }

    #[test]
    fn non_minimal_solution_is_flagged() {
        // Edge a→b makes indeg(b) = 2 while λ(b) = 2 > k = 1.
        let g = graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let inst = KdstInstance::new(g, 0, vec![3], 1, 3).unwrap();
        let report = check_minimal_lemmas(&EdgeSetSolution::all(&inst.graph), &inst);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, LemmaViolation::ConnectivityAboveK { vertex: 2, lambda: 2 })));
        // Two rooted paths of length ≤ 3 end with 2→3, bound k^1 = 1.
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, LemmaViolation::PathCount { ell: 3, count: 2, bound: 1, .. })));
    }

    #[test]
    fn witness_satisfies_the_diamond_program() {
        let d = diamond(2);
        let paths = enumerate_paths(&d).unwrap();
        let lp = build_lp_kdst_star(&d, &paths).unwrap();
        let values = relaxation_witness(&lp, &paths, &d, &EdgeSetSolution::all(&d.graph)).unwrap();
        assert!(lp.lp.max_violation(&values) < 1e-12);
        assert_eq!(lp.lp.objective(&values), 4.0);
    }

    #[test]
    fn shallowness() {
        let d = diamond(2);
        assert!(is_d_shallow(&EdgeSetSolution::all(&d.graph), &d).unwrap());
        // Path 0→1→2 with D = 1 is not shallow.
        let p = path(1.0, 1.0, 1);
        assert!(!is_d_shallow(&EdgeSetSolution::all(&p.graph), &p).unwrap());
    }
}
