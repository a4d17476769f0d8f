//! Bounded rooted path enumeration and the suffix-tree embedding.
//!
//! Every simple path that starts at the root and has at most `D` edges becomes
//! one node of a rooted tree; the node for `p + e` is a child of the node for
//! `p` and the tree edge between them costs `c_e`. A group is the set of nodes
//! whose path ends at a given terminal.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, EdgeSetSolution, KdstInstance, VertexId};

pub type PathId = usize;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 2_000_000;

/// A root-anchored simple path, stored as its edge sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedPath {
    pub edges: Vec<EdgeId>,
}

impl RootedPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self, graph: &DirectedGraph, root: VertexId) -> Vec<VertexId> {
        let mut out = vec![root];
        out.extend(self.edges.iter().map(|&e| graph.edge(e).head));
        out
    }

    pub fn cost(&self, graph: &DirectedGraph) -> f64 {
        self.edges.iter().map(|&e| graph.edge(e).cost).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct PathNode {
    parent: Option<PathId>,
    last_edge: Option<EdgeId>,
    end: VertexId,
    len: usize,
}

/// The family of simple rooted paths of length at most `D`, in BFS-by-length
/// order. Index 0 is the trivial path.
#[derive(Debug, Clone)]
pub struct PathSpace {
    depth_bound: usize,
    root: VertexId,
    nodes: Vec<PathNode>,
    children: Vec<Vec<PathId>>,
    by_end_vertex: Vec<Vec<PathId>>,
    by_end_edge: Vec<Vec<PathId>>,
}

impl PathSpace {
    pub fn depth_bound(&self) -> usize {
        self.depth_bound
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    /// Number of paths, counting the trivial one.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, p: PathId) -> Option<PathId> {
        self.nodes[p].parent
    }

    pub fn last_edge(&self, p: PathId) -> Option<EdgeId> {
        self.nodes[p].last_edge
    }

    pub fn end_vertex(&self, p: PathId) -> VertexId {
        self.nodes[p].end
    }

    pub fn path_len(&self, p: PathId) -> usize {
        self.nodes[p].len
    }

    pub fn children(&self, p: PathId) -> &[PathId] {
        &self.children[p]
    }

    pub fn by_end_vertex(&self, v: VertexId) -> &[PathId] {
        &self.by_end_vertex[v]
    }

    pub fn by_end_edge(&self, e: EdgeId) -> &[PathId] {
        &self.by_end_edge[e]
    }

    /// `Q_ell(e)`: paths of length at most `ell` whose last edge is `e`.
    pub fn ending_at_edge(&self, e: EdgeId, ell: usize) -> impl Iterator<Item = PathId> + '_ {
        self.by_end_edge[e]
            .iter()
            .copied()
            .filter(move |&p| self.nodes[p].len <= ell)
    }

    /// Ancestors of `p` from `p` itself up to (excluding) the trivial path.
    pub fn nonempty_prefixes(&self, p: PathId) -> impl Iterator<Item = PathId> + '_ {
        std::iter::successors(Some(p), move |&q| self.nodes[q].parent)
            .take_while(move |&q| self.nodes[q].len > 0)
    }

    pub fn edges(&self, p: PathId) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self
            .nonempty_prefixes(p)
            .map(|q| self.nodes[q].last_edge.unwrap())
            .collect();
        out.reverse();
        out
    }

    pub fn path(&self, p: PathId) -> RootedPath {
        RootedPath {
            edges: self.edges(p),
        }
    }

    pub fn uses_edge(&self, p: PathId, e: EdgeId) -> bool {
        self.nonempty_prefixes(p)
            .any(|q| self.nodes[q].last_edge == Some(e))
    }

    /// Whether `q` equals the first `|q|` edges of `p` (so `p` is a prefix of
    /// itself).
    pub fn is_prefix(&self, q: PathId, p: PathId) -> bool {
        let target = self.nodes[q].len;
        if target > self.nodes[p].len {
            return false;
        }
        let mut cur = p;
        while self.nodes[cur].len > target {
            cur = self.nodes[cur].parent.unwrap();
        }
        cur == q
    }

    /// Index of the path with the given edge sequence, if enumerated.
    pub fn find(&self, edges: &[EdgeId]) -> Option<PathId> {
        let mut cur = 0;
        for &e in edges {
            cur = *self.children[cur]
                .iter()
                .find(|&&c| self.nodes[c].last_edge == Some(e))?;
        }
        Some(cur)
    }

    fn contains_vertex(&self, p: PathId, v: VertexId) -> bool {
        std::iter::successors(Some(p), |&q| self.nodes[q].parent).any(|q| self.nodes[q].end == v)
    }
}

/// Enumerates `Q_D` with the default size cap.
pub fn enumerate_paths(instance: &KdstInstance) -> Result<PathSpace> {
    enumerate_paths_capped(instance, DEFAULT_PATH_CAP)
}

/// Enumerates every simple rooted path of length at most `D`. Children of a
/// path are ordered by `(head vertex, edge id)`. Fails once more than `cap`
/// paths would be produced.
pub fn enumerate_paths_capped(instance: &KdstInstance, cap: usize) -> Result<PathSpace> {
    let g = &instance.graph;
    let mut space = PathSpace {
        depth_bound: instance.depth_bound,
        root: instance.root,
        nodes: vec![PathNode {
            parent: None,
            last_edge: None,
            end: instance.root,
            len: 0,
        }],
        children: vec![Vec::new()],
        by_end_vertex: vec![Vec::new(); g.vertex_count()],
        by_end_edge: vec![Vec::new(); g.edge_count()],
    };
    space.by_end_vertex[instance.root].push(0);

    let mut level_start = 0;
    for len in 1..=instance.depth_bound {
        let level_end = space.nodes.len();
        if level_start == level_end {
            break;
        }
        for p in level_start..level_end {
            let at = space.nodes[p].end;
            // out_edges is sorted by head, which is the required child order.
            for &e in g.out_edges(at) {
                let head = g.edge(e).head;
                if space.contains_vertex(p, head) {
                    continue;
                }
                if space.nodes.len() >= cap {
                    return Err(Error::PathBlowup {
                        cap,
                        reached: space.nodes.len() + 1,
                    });
                }
                let id = space.nodes.len();
                space.nodes.push(PathNode {
                    parent: Some(p),
                    last_edge: Some(e),
                    end: head,
                    len,
                });
                space.children.push(Vec::new());
                space.children[p].push(id);
                space.by_end_vertex[head].push(id);
                space.by_end_edge[e].push(id);
            }
        }
        level_start = level_end;
    }
    Ok(space)
}

pub type NodeId = usize;
pub type TreeEdgeId = usize;

/// The suffix tree of a [`PathSpace`]. Node ids coincide with path ids; tree
/// edge `t` enters node `t + 1`.
#[derive(Debug, Clone)]
pub struct GstTree {
    parent: Vec<Option<NodeId>>,
    depth: Vec<usize>,
    edge_origin: Vec<EdgeId>,
    edge_cost: Vec<f64>,
    groups: Vec<Vec<NodeId>>,
    terminals: Vec<VertexId>,
}

impl GstTree {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_origin.len()
    }

    pub fn parent_node(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    /// Tree edge entering node `v`, if `v` is not the root.
    pub fn edge_into(v: NodeId) -> Option<TreeEdgeId> {
        v.checked_sub(1)
    }

    pub fn child_of_edge(t: TreeEdgeId) -> NodeId {
        t + 1
    }

    /// Parent edge of tree edge `t`, or `None` for edges leaving the root.
    pub fn parent_edge(&self, t: TreeEdgeId) -> Option<TreeEdgeId> {
        self.parent[t + 1].and_then(Self::edge_into)
    }

    pub fn edge_origin(&self, t: TreeEdgeId) -> EdgeId {
        self.edge_origin[t]
    }

    pub fn edge_cost(&self, t: TreeEdgeId) -> f64 {
        self.edge_cost[t]
    }

    pub fn groups(&self) -> &[Vec<NodeId>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[NodeId] {
        &self.groups[i]
    }

    pub fn terminals(&self) -> &[VertexId] {
        &self.terminals
    }

    /// Tree edges on the path from the root to `v`, deepest first.
    pub fn edges_above(&self, v: NodeId) -> impl Iterator<Item = TreeEdgeId> + '_ {
        std::iter::successors(Some(v), move |&u| self.parent[u]).filter_map(Self::edge_into)
    }

    pub fn cost_of(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.edge_cost).map(|(a, c)| a * c).sum()
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, space: &PathSpace) -> String {
        let mut out = String::from("digraph gst {\n");
        let mut group_of = vec![Vec::new(); self.node_count()];
        for (i, g) in self.groups.iter().enumerate() {
            for &v in g {
                group_of[v].push(i);
            }
        }
        for v in 0..self.node_count() {
            let label = if v == 0 {
                format!("r{}", space.root())
            } else {
                format!("{}", space.end_vertex(v))
            };
            let shape = if group_of[v].is_empty() { "ellipse" } else { "box" };
            let _ = writeln!(out, "  n{} [label=\"{}\", shape={}];", v, label, shape);
        }
        for t in 0..self.edge_count() {
            let child = Self::child_of_edge(t);
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"e{} c={}\"];",
                self.parent[child].unwrap(),
                child,
                self.edge_origin[t],
                self.edge_cost[t]
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the suffix tree with groups `T_i = Q_D(t_i)`. Fails if some terminal
/// has no path of length at most `D`.
pub fn build_gst_tree(paths: &PathSpace, instance: &KdstInstance) -> Result<GstTree> {
    let n = paths.len();
    let mut parent = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    let mut edge_origin = Vec::with_capacity(n.saturating_sub(1));
    let mut edge_cost = Vec::with_capacity(n.saturating_sub(1));
    for p in 0..n {
        parent.push(paths.parent(p));
        depth.push(paths.path_len(p));
        if let Some(e) = paths.last_edge(p) {
            edge_origin.push(e);
            edge_cost.push(instance.graph.edge(e).cost);
        }
    }
    let mut groups = Vec::with_capacity(instance.terminals.len());
    for &t in &instance.terminals {
        let group = paths.by_end_vertex(t).to_vec();
        if group.is_empty() {
            return Err(Error::TerminalUnreachable(t));
        }
        groups.push(group);
    }
    Ok(GstTree {
        parent,
        depth,
        edge_origin,
        edge_cost,
        groups,
        terminals: instance.terminals.clone(),
    })
}

/// Distinct original edges behind a set of tree edges.
pub fn map_tree_edges_to_graph(
    tree_edges: impl IntoIterator<Item = TreeEdgeId>,
    tree: &GstTree,
) -> EdgeSetSolution {
    EdgeSetSolution {
        edges: tree_edges
            .into_iter()
            .map(|t| tree.edge_origin(t))
            .collect(),
    }
}
