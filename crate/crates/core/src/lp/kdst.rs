use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, KdstInstance};
use crate::lp::{LinearProgram, LpSolution, Relation, VarId, VarTag};
use crate::paths::{GstTree, NodeId, PathId, PathSpace};

pub const DEFAULT_CONSTRAINT_CAP: usize = 2_000_000;

/// A path-based k-DST program together with the index maps needed to read
/// its solutions.
#[derive(Debug, Clone)]
pub struct KdstLp {
    pub lp: LinearProgram,
    /// `x_e` for every graph edge.
    pub x: Vec<VarId>,
    /// `f^i_p` for every terminal `i` and `p` in `Q_D(t_i)`.
    pub flows: Vec<Vec<(PathId, VarId)>>,
    /// `y_p` for every nonempty path; empty for the plain formulation.
    pub prefix: Vec<Option<VarId>>,
    pub k: usize,
    pub depth_bound: usize,
}

impl KdstLp {
    pub fn has_prefix_vars(&self) -> bool {
        self.prefix.iter().any(Option::is_some)
    }

    pub fn x_values(&self, sol: &LpSolution) -> Vec<f64> {
        self.x.iter().map(|&j| sol.values[j]).collect()
    }

    pub fn flow_values<'a>(
        &'a self,
        sol: &'a LpSolution,
        terminal: usize,
    ) -> impl Iterator<Item = (PathId, f64)> + 'a {
        self.flows[terminal]
            .iter()
            .map(move |&(p, j)| (p, sol.values[j]))
    }

    pub fn y_value(&self, sol: &LpSolution, p: PathId) -> Option<f64> {
        self.prefix.get(p).copied().flatten().map(|j| sol.values[j])
    }

    /// `Σ_e c_e x_e` of a solution.
    pub fn edge_cost(&self, sol: &LpSolution) -> f64 {
        self.lp.objective(&sol.values)
    }
}

fn check_groups(instance: &KdstInstance, paths: &PathSpace) -> Result<()> {
    for &t in &instance.terminals {
        if paths.by_end_vertex(t).is_empty() {
            return Err(Error::TerminalUnreachable(t));
        }
    }
    Ok(())
}

struct RowSink<'a> {
    lp: &'a mut LinearProgram,
    cap: usize,
}

impl RowSink<'_> {
    fn push(
        &mut self,
        name: String,
        coeffs: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<()> {
        if self.lp.num_constraints() >= self.cap {
            return Err(Error::ConstraintCap { cap: self.cap });
        }
        self.lp.add_constraint(name, coeffs, relation, rhs);
        Ok(())
    }
}

/// Shared part of both k-DST programs: `x`, `f`, the per-edge capacity rows
/// and the k-flow rows.
fn build_base(
    instance: &KdstInstance,
    paths: &PathSpace,
    name: &str,
    cap: usize,
) -> Result<KdstLp> {
    check_groups(instance, paths)?;
    let g = &instance.graph;
    let mut lp = LinearProgram::new(name);
    let x: Vec<VarId> = (0..g.edge_count())
        .map(|e| lp.add_var(format!("x_{}", e), 0.0, 1.0, g.edge(e).cost, VarTag::Edge { edge: e }))
        .collect();
    let mut flows = Vec::with_capacity(instance.terminals.len());
    for (i, &t) in instance.terminals.iter().enumerate() {
        let vars: Vec<(PathId, VarId)> = paths
            .by_end_vertex(t)
            .iter()
            .map(|&p| {
                let j = lp.add_var(
                    format!("f_{}_{}", i, p),
                    0.0,
                    f64::INFINITY,
                    0.0,
                    VarTag::Flow { terminal: i, path: p },
                );
                (p, j)
            })
            .collect();
        flows.push(vars);
    }

    let mut sink = RowSink { lp: &mut lp, cap };
    for (i, vars) in flows.iter().enumerate() {
        // Edge capacity: Σ_{p ∋ e} f^i_p ≤ x_e.
        let mut by_edge: HashMap<EdgeId, Vec<(VarId, f64)>> = HashMap::new();
        for &(p, j) in vars {
            for e in paths.edges(p) {
                by_edge.entry(e).or_default().push((j, 1.0));
            }
        }
        let mut edges: Vec<EdgeId> = by_edge.keys().copied().collect();
        edges.sort_unstable();
        for e in edges {
            let mut coeffs = by_edge.remove(&e).unwrap();
            coeffs.push((x[e], -1.0));
            sink.push(format!("cap_e{}_t{}", e, i), coeffs, Relation::Le, 0.0)?;
        }
        // k-flow: Σ_p f^i_p ≥ k.
        let coeffs = vars.iter().map(|&(_, j)| (j, 1.0)).collect();
        sink.push(format!("kflow_t{}", i), coeffs, Relation::Ge, instance.k as f64)?;
    }

    Ok(KdstLp {
        lp,
        x,
        flows,
        prefix: Vec::new(),
        k: instance.k,
        depth_bound: paths.depth_bound(),
    })
}

/// The standard path LP: edge capacities and k-flow rows only.
pub fn build_lp_kdst(instance: &KdstInstance, paths: &PathSpace) -> Result<KdstLp> {
    build_lp_kdst_capped(instance, paths, DEFAULT_CONSTRAINT_CAP)
}

pub fn build_lp_kdst_capped(instance: &KdstInstance, paths: &PathSpace, cap: usize) -> Result<KdstLp> {
    let mut out = build_base(instance, paths, "lp_kdst", cap)?;
    out.prefix = vec![None; paths.len()];
    Ok(out)
}

/// The strengthened LP. On top of [`build_lp_kdst`] it has a prefix variable
/// `y_q ∈ [0, 1]` for every nonempty path and the rows
///
/// * subflow capacity: `Σ_{p ∈ Q_D(t_i), q prefix of p} f^i_p ≤ y_q` for all `q`, `i`;
/// * aggregated k-flow: `Σ_{p ∈ Q_ℓ(e)} y_p ≤ max(1, k^(ℓ-2)) · x_e` for all `e`
///   and `ℓ = 1..D`.
///
/// Rows with an empty left-hand side are omitted.
pub fn build_lp_kdst_star(instance: &KdstInstance, paths: &PathSpace) -> Result<KdstLp> {
    build_lp_kdst_star_capped(instance, paths, DEFAULT_CONSTRAINT_CAP)
}

pub fn build_lp_kdst_star_capped(
    instance: &KdstInstance,
    paths: &PathSpace,
    cap: usize,
) -> Result<KdstLp> {
    let mut out = build_base(instance, paths, "lp_kdst_star", cap)?;
    let lp = &mut out.lp;
    let mut prefix = vec![None; paths.len()];
    for (p, slot) in prefix.iter_mut().enumerate().skip(1) {
        *slot = Some(lp.add_var(format!("y_{}", p), 0.0, 1.0, 0.0, VarTag::Prefix { path: p }));
    }

    let mut sink = RowSink { lp, cap };
    for (i, vars) in out.flows.iter().enumerate() {
        let mut by_prefix: HashMap<PathId, Vec<(VarId, f64)>> = HashMap::new();
        for &(p, j) in vars {
            for q in paths.nonempty_prefixes(p) {
                by_prefix.entry(q).or_default().push((j, 1.0));
            }
        }
        let mut qs: Vec<PathId> = by_prefix.keys().copied().collect();
        qs.sort_unstable();
        for q in qs {
            let mut coeffs = by_prefix.remove(&q).unwrap();
            coeffs.push((prefix[q].unwrap(), -1.0));
            sink.push(format!("subflow_q{}_t{}", q, i), coeffs, Relation::Le, 0.0)?;
        }
    }

    let k = instance.k as f64;
    for e in 0..instance.graph.edge_count() {
        for ell in 1..=paths.depth_bound() {
            let mut coeffs: Vec<(VarId, f64)> = paths
                .ending_at_edge(e, ell)
                .map(|p| (prefix[p].unwrap(), 1.0))
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            let multiplier = if ell >= 2 { k.powi(ell as i32 - 2).max(1.0) } else { 1.0 };
            coeffs.push((out.x[e], -multiplier));
            sink.push(format!("aggr_e{}_l{}", e, ell), coeffs, Relation::Le, 0.0)?;
        }
    }
    out.prefix = prefix;
    Ok(out)
}

/// A point in the LP-GST space of a tree: `x̂` per tree edge and `f̂^i` per
/// group node.
#[derive(Debug, Clone, PartialEq)]
pub struct GstPoint {
    pub x_hat: Vec<f64>,
    pub f_hat: Vec<Vec<(NodeId, f64)>>,
}

impl GstPoint {
    pub fn cost(&self, tree: &GstTree) -> f64 {
        tree.cost_of(&self.x_hat)
    }

    pub fn group_flow(&self, i: usize) -> f64 {
        self.f_hat[i].iter().map(|&(_, f)| f).sum()
    }
}

/// The group Steiner tree LP on a tree. Root-to-node paths are unique, so
/// flows are indexed by group node.
#[derive(Debug, Clone)]
pub struct GstLp {
    pub lp: LinearProgram,
    pub x_hat: Vec<VarId>,
    pub f_hat: Vec<Vec<(NodeId, VarId)>>,
}

impl GstLp {
    /// The variable vector of `point` in this program's layout.
    pub fn values_of(&self, point: &GstPoint) -> Vec<f64> {
        let mut values = vec![0.0; self.lp.num_vars()];
        for (t, &j) in self.x_hat.iter().enumerate() {
            values[j] = point.x_hat[t];
        }
        for (i, vars) in self.f_hat.iter().enumerate() {
            let lookup: HashMap<NodeId, f64> = point.f_hat[i].iter().copied().collect();
            for &(v, j) in vars {
                values[j] = lookup.get(&v).copied().unwrap_or(0.0);
            }
        }
        values
    }

    pub fn point_of(&self, values: &[f64]) -> GstPoint {
        GstPoint {
            x_hat: self.x_hat.iter().map(|&j| values[j]).collect(),
            f_hat: self
                .f_hat
                .iter()
                .map(|vars| vars.iter().map(|&(v, j)| (v, values[j])).collect())
                .collect(),
        }
    }
}

/// LP-GST on `tree`: for every tree edge `t` and group `i`, the group flow
/// below `t` is at most `x̂_t`; every group receives flow at least one.
pub fn build_lp_gst(tree: &GstTree) -> GstLp {
    let mut lp = LinearProgram::new("lp_gst");
    let x_hat: Vec<VarId> = (0..tree.edge_count())
        .map(|t| lp.add_var(format!("xh_{}", t), 0.0, 1.0, tree.edge_cost(t), VarTag::TreeEdge { tree_edge: t }))
        .collect();
    let mut f_hat = Vec::with_capacity(tree.groups().len());
    for (i, group) in tree.groups().iter().enumerate() {
        let vars: Vec<(NodeId, VarId)> = group
            .iter()
            .map(|&v| {
                let j = lp.add_var(
                    format!("fh_{}_{}", i, v),
                    0.0,
                    f64::INFINITY,
                    0.0,
                    VarTag::TreeFlow { terminal: i, node: v },
                );
                (v, j)
            })
            .collect();
        let mut by_edge: HashMap<usize, Vec<(VarId, f64)>> = HashMap::new();
        for &(v, j) in &vars {
            for t in tree.edges_above(v) {
                by_edge.entry(t).or_default().push((j, 1.0));
            }
        }
        let mut edges: Vec<usize> = by_edge.keys().copied().collect();
        edges.sort_unstable();
        for t in edges {
            let mut coeffs = by_edge.remove(&t).unwrap();
            coeffs.push((x_hat[t], -1.0));
            lp.add_constraint(format!("gcap_t{}_g{}", t, i), coeffs, Relation::Le, 0.0);
        }
        lp.add_constraint(
            format!("gconn_g{}", i),
            vars.iter().map(|&(_, j)| (j, 1.0)).collect(),
            Relation::Ge,
            1.0,
        );
        f_hat.push(vars);
    }
    GstLp { lp, x_hat, f_hat }
}

/// Maps an LP-k-DST* solution onto the tree: `x̂` on the edge into node
/// `p + e` is `y_{p+e}` (clamped to `[0, 1]`), and `f̂^i` at a group node is
/// the flow `f^i` on the same path.
pub fn embed_solution(kdst: &KdstLp, sol: &LpSolution, tree: &GstTree) -> Result<GstPoint> {
    if !sol.is_optimal() {
        return Err(Error::Config("embedding needs an optimal LP solution".into()));
    }
    if !kdst.has_prefix_vars() && tree.edge_count() > 0 {
        return Err(Error::Config(
            "embedding needs the strengthened LP (prefix variables missing)".into(),
        ));
    }
    let x_hat = (0..tree.edge_count())
        .map(|t| {
            let node = GstTree::child_of_edge(t);
            kdst.y_value(sol, node).unwrap_or(0.0).clamp(0.0, 1.0)
        })
        .collect();
    let f_hat = (0..kdst.flows.len())
        .map(|i| kdst.flow_values(sol, i).collect())
        .collect();
    Ok(GstPoint { x_hat, f_hat })
}

/// Zeroes every tree edge whose origin lies in `removed`, and every group flow
/// whose path uses such an edge.
pub fn restrict_solution(embedded: &GstPoint, tree: &GstTree, removed: &BTreeSet<EdgeId>) -> GstPoint {
    let hit = |t: usize| removed.contains(&tree.edge_origin(t));
    let x_hat = embedded
        .x_hat
        .iter()
        .enumerate()
        .map(|(t, &x)| if hit(t) { 0.0 } else { x })
        .collect();
    let f_hat = embedded
        .f_hat
        .iter()
        .map(|flows| {
            flows
                .iter()
                .map(|&(v, f)| {
                    if tree.edges_above(v).any(hit) {
                        (v, 0.0)
                    } else {
                        (v, f)
                    }
                })
                .collect()
        })
        .collect();
    GstPoint { x_hat, f_hat }
}
