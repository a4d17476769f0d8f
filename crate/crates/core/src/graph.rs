//! Directed instance model, the line-oriented instance format, and the
//! metric-completion transform.
//!
//! Edges are kept sorted by `(tail, head)` so an edge id is a canonical
//! property of the graph: parsing a serialized instance yields the same ids.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub cost: f64,
}

/// Simple directed graph with nonnegative edge costs.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count && self.edges == other.edges
    }
}

impl DirectedGraph {
    /// Builds a graph, rejecting self-loops, parallel edges, out-of-range
    /// endpoints and negative or non-finite costs.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            if e.tail >= vertex_count || e.head >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {}->{} references a vertex outside 0..{}",
                    e.tail, e.head, vertex_count
                )));
            }
            if e.tail == e.head {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", e.tail)));
            }
            if !e.cost.is_finite() || e.cost < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge {}->{} has invalid cost {}",
                    e.tail, e.head, e.cost
                )));
            }
        }
        edges.sort_by_key(|e| (e.tail, e.head));
        for pair in edges.windows(2) {
            if pair[0].tail == pair[1].tail && pair[0].head == pair[1].head {
                return Err(Error::ParallelEdge {
                    tail: pair[0].tail,
                    head: pair[0].head,
                });
            }
        }
        let mut out_edges = vec![Vec::new(); vertex_count];
        let mut in_edges = vec![Vec::new(); vertex_count];
        for (id, e) in edges.iter().enumerate() {
            out_edges[e.tail].push(id);
            in_edges[e.head].push(id);
        }
        Ok(Self {
            vertex_count,
            edges,
            out_edges,
            in_edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Outgoing edge ids of `v`, ordered by head vertex.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    pub fn find_edge(&self, tail: VertexId, head: VertexId) -> Option<EdgeId> {
        self.out_edges
            .get(tail)?
            .iter()
            .copied()
            .find(|&id| self.edges[id].head == head)
    }

    /// The graph with every edge reversed. Returns the new graph and, for each
    /// new edge id, the id of the original edge.
    pub fn reversed(&self) -> (DirectedGraph, Vec<EdgeId>) {
        let mut tagged: Vec<(Edge, EdgeId)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(id, e)| {
                (
                    Edge {
                        tail: e.head,
                        head: e.tail,
                        cost: e.cost,
                    },
                    id,
                )
            })
            .collect();
        tagged.sort_by_key(|(e, _)| (e.tail, e.head));
        let origin = tagged.iter().map(|&(_, id)| id).collect();
        let graph = DirectedGraph::new(self.vertex_count, tagged.into_iter().map(|(e, _)| e))
            .expect("reversal of a valid graph is valid");
        (graph, origin)
    }

    /// Drops every edge entering `v`. Returns the new graph and, for each new
    /// edge id, the id of the original edge.
    pub fn without_in_edges_of(&self, v: VertexId) -> (DirectedGraph, Vec<EdgeId>) {
        let kept: Vec<EdgeId> = (0..self.edges.len())
            .filter(|&id| self.edges[id].head != v)
            .collect();
        let graph = DirectedGraph::new(self.vertex_count, kept.iter().map(|&id| self.edges[id]))
            .expect("subgraph of a valid graph is valid");
        (graph, kept)
    }
}

/// A k-DST instance: graph, root, ordered terminals, connectivity `k` and
/// path-length bound `D`. The root never has incoming edges.
#[derive(Debug, Clone, PartialEq)]
pub struct KdstInstance {
    pub graph: DirectedGraph,
    pub root: VertexId,
    pub terminals: Vec<VertexId>,
    pub k: usize,
    pub depth_bound: usize,
}

impl KdstInstance {
    pub fn new(
        graph: DirectedGraph,
        root: VertexId,
        terminals: Vec<VertexId>,
        k: usize,
        depth_bound: usize,
    ) -> Result<Self> {
        validate_header(&graph, root, &terminals, k as i64, depth_bound as i64, true)?;
        if !graph.in_edges(root).is_empty() {
            return Err(Error::InvalidGraph(format!(
                "root {} has incoming edges",
                root
            )));
        }
        Ok(Self {
            graph,
            root,
            terminals,
            k,
            depth_bound,
        })
    }

    /// Like [`KdstInstance::new`] but silently drops edges entering the root.
    /// Returns the instance and the original id of every kept edge.
    pub fn with_root_in_edges_dropped(
        graph: &DirectedGraph,
        root: VertexId,
        terminals: Vec<VertexId>,
        k: usize,
        depth_bound: usize,
    ) -> Result<(Self, Vec<EdgeId>)> {
        if root >= graph.vertex_count() {
            return Err(Error::InvalidGraph(format!("root {} out of range", root)));
        }
        let (g, origin) = graph.without_in_edges_of(root);
        Ok((Self::new(g, root, terminals, k, depth_bound)?, origin))
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    /// Serializes to the `kdst 1` text format. Edges are emitted sorted by
    /// `(tail, head)`; costs use the shortest round-tripping decimal form.
    pub fn to_text(&self) -> String {
        write_instance_text(
            &self.graph,
            self.root,
            &self.terminals,
            self.k,
            self.depth_bound,
        )
    }
}

/// An unrooted instance for the k-edge-connected Steiner subgraph problem:
/// every ordered pair of terminals must be k-edge-connected.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphInstance {
    pub graph: DirectedGraph,
    pub terminals: Vec<VertexId>,
    pub k: usize,
    pub depth_bound: usize,
}

impl SubgraphInstance {
    pub fn new(
        graph: DirectedGraph,
        terminals: Vec<VertexId>,
        k: usize,
        depth_bound: usize,
    ) -> Result<Self> {
        if terminals.len() < 2 {
            return Err(Error::Config("subgraph instances need at least two terminals".into()));
        }
        validate_header(&graph, terminals[0], &terminals[1..], k as i64, depth_bound as i64, true)?;
        Ok(Self {
            graph,
            terminals,
            k,
            depth_bound,
        })
    }

    /// Same text format as rooted instances; the first terminal is written as
    /// the root.
    pub fn to_text(&self) -> String {
        write_instance_text(
            &self.graph,
            self.terminals[0],
            &self.terminals[1..],
            self.k,
            self.depth_bound,
        )
    }
}

fn write_instance_text(
    graph: &DirectedGraph,
    root: VertexId,
    terminals: &[VertexId],
    k: usize,
    depth_bound: usize,
) -> String {
    let mut out = String::new();
    out.push_str("kdst 1\n");
    let _ = writeln!(
        out,
        "n {} r {} k {} D {}",
        graph.vertex_count(),
        root,
        k,
        depth_bound
    );
    out.push('T');
    for t in terminals {
        let _ = write!(out, " {}", t);
    }
    out.push('\n');
    for e in graph.edges() {
        let _ = writeln!(out, "e {} {} {}", e.tail, e.head, e.cost);
    }
    out
}

fn validate_header(
    graph: &DirectedGraph,
    root: VertexId,
    terminals: &[VertexId],
    k: i64,
    depth_bound: i64,
    require_terminal: bool,
) -> Result<()> {
    let n = graph.vertex_count();
    if root >= n {
        return Err(Error::InvalidGraph(format!("root {} out of range 0..{}", root, n)));
    }
    if k < 1 {
        return Err(Error::InvalidConnectivity(k));
    }
    if depth_bound < 1 {
        return Err(Error::InvalidDepthBound(depth_bound));
    }
    if require_terminal && terminals.is_empty() {
        return Err(Error::InvalidGraph("terminal list is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for &t in terminals {
        if t >= n {
            return Err(Error::InvalidGraph(format!("terminal {} out of range 0..{}", t, n)));
        }
        if t == root {
            return Err(Error::RootIsTerminal(root));
        }
        if !seen.insert(t) {
            return Err(Error::InvalidGraph(format!("terminal {} listed twice", t)));
        }
    }
    Ok(())
}

/// How repeated `(tail, head)` pairs in an instance file are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ParallelPolicy {
    /// Parallel edges are a parse error.
    #[default]
    Reject,
    /// Every copy after the first is subdivided by a fresh vertex; the new
    /// second half has cost zero. May lengthen paths by one edge.
    Split,
    /// Keep only the cheapest copy.
    CollapseCheapest,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub parallel: ParallelPolicy,
}

/// Counters for every normalization applied while parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NormalizationReport {
    pub collapsed_parallel: usize,
    pub split_parallel: usize,
    pub dropped_root_in_edges: usize,
}

impl NormalizationReport {
    pub fn warning_count(&self) -> usize {
        self.collapsed_parallel + self.split_parallel + self.dropped_root_in_edges
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub instance: KdstInstance,
    pub report: NormalizationReport,
}

pub fn parse_instance(text: &str) -> Result<ParsedInstance> {
    parse_instance_with(text, ParseOptions::default())
}

struct RawInstance {
    n: usize,
    root: VertexId,
    k: i64,
    depth_bound: i64,
    terminals: Vec<VertexId>,
    edges: Vec<(usize, Edge)>,
}

fn parse_raw(text: &str) -> Result<RawInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let syntax = |line: usize, message: &str| Error::Syntax {
        line,
        message: message.to_string(),
    };

    let (line_no, magic) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let magic: Vec<&str> = magic.split_whitespace().collect();
    if magic != ["kdst", "1"] {
        return Err(syntax(line_no, "expected header `kdst 1`"));
    }

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| syntax(line_no, "missing `n .. r .. k .. D ..` line"))?;
    let mut n = None;
    let mut root = None;
    let mut k = None;
    let mut depth_bound = None;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if !tokens.len().is_multiple_of(2) {
        return Err(syntax(line_no, "header fields must be `key value` pairs"));
    }
    for pair in tokens.chunks(2) {
        let value: i64 = pair[1]
            .parse()
            .map_err(|_| syntax(line_no, &format!("`{}` is not an integer", pair[1])))?;
        let slot = match pair[0] {
            "n" => &mut n,
            "r" => &mut root,
            "k" => &mut k,
            "D" => &mut depth_bound,
            other => return Err(syntax(line_no, &format!("unknown header field `{}`", other))),
        };
        if slot.replace(value).is_some() {
            return Err(syntax(line_no, &format!("duplicate header field `{}`", pair[0])));
        }
    }
    let n = n.ok_or_else(|| syntax(line_no, "missing `n`"))?;
    let root = root.ok_or_else(|| syntax(line_no, "missing `r`"))?;
    let k = k.ok_or_else(|| syntax(line_no, "missing `k`"))?;
    let depth_bound = depth_bound.ok_or_else(|| syntax(line_no, "missing `D`"))?;
    if n < 1 {
        return Err(syntax(line_no, "n must be positive"));
    }
    if root < 0 || root >= n {
        return Err(syntax(line_no, "root out of range"));
    }

    let (line_no, tline) = lines
        .next()
        .ok_or_else(|| syntax(line_no, "missing terminal line `T ...`"))?;
    let mut tokens = tline.split_whitespace();
    if tokens.next() != Some("T") {
        return Err(syntax(line_no, "expected terminal line starting with `T`"));
    }
    let terminals = tokens
        .map(|t| parse_vertex(t, n, line_no))
        .collect::<Result<Vec<_>>>()?;

    let mut edges = Vec::new();
    for (line_no, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "e" {
            return Err(syntax(line_no, "expected edge line `e <tail> <head> <cost>`"));
        }
        let tail = parse_vertex(tokens[1], n, line_no)?;
        let head = parse_vertex(tokens[2], n, line_no)?;
        let cost: f64 = tokens[3]
            .parse()
            .map_err(|_| syntax(line_no, &format!("`{}` is not a number", tokens[3])))?;
        if !cost.is_finite() {
            return Err(syntax(line_no, "cost must be finite"));
        }
        if cost < 0.0 {
            return Err(Error::NegativeCost {
                line: line_no,
                tail,
                head,
                cost,
            });
        }
        if tail == head {
            return Err(syntax(line_no, "self-loops are not allowed"));
        }
        edges.push((line_no, Edge { tail, head, cost }));
    }

    Ok(RawInstance {
        n: n as usize,
        root: root as usize,
        k,
        depth_bound,
        terminals,
        edges,
    })
}

fn parse_vertex(token: &str, n: i64, line: usize) -> Result<VertexId> {
    let v: i64 = token.parse().map_err(|_| Error::Syntax {
        line,
        message: format!("`{}` is not a vertex id", token),
    })?;
    if v < 0 || v >= n {
        return Err(Error::Syntax {
            line,
            message: format!("vertex {} out of range 0..{}", v, n),
        });
    }
    Ok(v as usize)
}

/// Applies the parallel-edge policy. Returns the final vertex count and edges.
fn resolve_parallel(
    n: usize,
    edges: Vec<(usize, Edge)>,
    policy: ParallelPolicy,
    report: &mut NormalizationReport,
) -> Result<(usize, Vec<Edge>)> {
    let mut first: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut out: Vec<Edge> = Vec::with_capacity(edges.len());
    let mut vertex_count = n;
    for (_, e) in edges {
        match first.get(&(e.tail, e.head)) {
            None => {
                first.insert((e.tail, e.head), out.len());
                out.push(e);
            }
            Some(&idx) => match policy {
                ParallelPolicy::Reject => {
                    return Err(Error::ParallelEdge {
                        tail: e.tail,
                        head: e.head,
                    })
                }
                ParallelPolicy::CollapseCheapest => {
                    report.collapsed_parallel += 1;
                    if e.cost < out[idx].cost {
                        out[idx].cost = e.cost;
                    }
                }
                ParallelPolicy::Split => {
                    report.split_parallel += 1;
                    let mid = vertex_count;
                    vertex_count += 1;
                    out.push(Edge {
                        tail: e.tail,
                        head: mid,
                        cost: e.cost,
                    });
                    out.push(Edge {
                        tail: mid,
                        head: e.head,
                        cost: 0.0,
                    });
                }
            },
        }
    }
    Ok((vertex_count, out))
}

/// Parses and normalizes a rooted instance: parallel edges are handled per
/// `options.parallel` and edges entering the root are dropped (each counted
/// in the report).
pub fn parse_instance_with(text: &str, options: ParseOptions) -> Result<ParsedInstance> {
    let raw = parse_raw(text)?;
    if raw.k < 1 {
        return Err(Error::InvalidConnectivity(raw.k));
    }
    if raw.depth_bound < 1 {
        return Err(Error::InvalidDepthBound(raw.depth_bound));
    }
    if raw.terminals.contains(&raw.root) {
        return Err(Error::RootIsTerminal(raw.root));
    }
    let mut report = NormalizationReport::default();
    let (n, edges) = resolve_parallel(raw.n, raw.edges, options.parallel, &mut report)?;
    let before = edges.len();
    let edges: Vec<Edge> = edges.into_iter().filter(|e| e.head != raw.root).collect();
    report.dropped_root_in_edges = before - edges.len();
    let graph = DirectedGraph::new(n, edges)?;
    let instance = KdstInstance::new(
        graph,
        raw.root,
        raw.terminals,
        raw.k as usize,
        raw.depth_bound as usize,
    )?;
    Ok(ParsedInstance { instance, report })
}

/// Parses an unrooted subgraph instance. The `r` field is read as the first
/// terminal and no edges are dropped.
pub fn parse_subgraph_instance(text: &str, options: ParseOptions) -> Result<SubgraphInstance> {
    let raw = parse_raw(text)?;
    if raw.k < 1 {
        return Err(Error::InvalidConnectivity(raw.k));
    }
    if raw.depth_bound < 1 {
        return Err(Error::InvalidDepthBound(raw.depth_bound));
    }
    let mut report = NormalizationReport::default();
    let (n, edges) = resolve_parallel(raw.n, raw.edges, options.parallel, &mut report)?;
    let graph = DirectedGraph::new(n, edges)?;
    let mut terminals = vec![raw.root];
    terminals.extend(raw.terminals);
    SubgraphInstance::new(graph, terminals, raw.k as usize, raw.depth_bound as usize)
}

/// A set of edges of a parent graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSetSolution {
    pub edges: BTreeSet<EdgeId>,
}

impl EdgeSetSolution {
    pub fn new(graph: &DirectedGraph, edges: impl IntoIterator<Item = EdgeId>) -> Result<Self> {
        let edges: BTreeSet<EdgeId> = edges.into_iter().collect();
        if let Some(&bad) = edges.iter().find(|&&e| e >= graph.edge_count()) {
            return Err(Error::UnknownEdge(bad));
        }
        Ok(Self { edges })
    }

    pub fn all(graph: &DirectedGraph) -> Self {
        Self {
            edges: (0..graph.edge_count()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            edges: self.edges.union(&other.edges).copied().collect(),
        }
    }

    pub fn cost(&self, graph: &DirectedGraph) -> f64 {
        cost(self, graph)
    }

    /// `(tail, head)` pairs, for output formats that must not depend on ids.
    pub fn endpoints(&self, graph: &DirectedGraph) -> Vec<(VertexId, VertexId)> {
        self.edges
            .iter()
            .map(|&e| (graph.edge(e).tail, graph.edge(e).head))
            .collect()
    }
}

pub fn cost(solution: &EdgeSetSolution, graph: &DirectedGraph) -> f64 {
    solution.edges.iter().map(|&e| graph.edge(e).cost).sum()
}

/// Strict layering: every edge goes from layer `i` to layer `i + 1`, the root
/// sits in layer 0 and no layer exceeds `D`. Returns the layer of every
/// vertex, or `None` when no such layering exists. Components not reachable
/// from the root start at layer 1.
pub fn is_layered_dag(instance: &KdstInstance) -> Option<Vec<usize>> {
    let g = &instance.graph;
    let n = g.vertex_count();
    let mut layer: Vec<Option<i64>> = vec![None; n];
    let mut order: Vec<VertexId> = vec![instance.root];
    order.extend((0..n).filter(|&v| v != instance.root));
    for start in order {
        if layer[start].is_some() {
            continue;
        }
        layer[start] = Some(0);
        let mut component = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            let lu = layer[u].unwrap();
            let neighbours = g
                .out_edges(u)
                .iter()
                .map(|&e| (g.edge(e).head, lu + 1))
                .chain(g.in_edges(u).iter().map(|&e| (g.edge(e).tail, lu - 1)));
            for (w, want) in neighbours {
                match layer[w] {
                    Some(have) if have != want => return None,
                    Some(_) => {}
                    None => {
                        layer[w] = Some(want);
                        component.push(w);
                        stack.push(w);
                    }
                }
            }
        }
        let min = component.iter().map(|&v| layer[v].unwrap()).min().unwrap();
        let shift = if start == instance.root {
            if min < 0 {
                return None;
            }
            0
        } else {
            1 - min
        };
        for &v in &component {
            layer[v] = Some(layer[v].unwrap() + shift);
        }
    }
    let layers: Vec<usize> = layer.into_iter().map(|l| l.unwrap() as usize).collect();
    if layers.iter().any(|&l| l > instance.depth_bound) {
        return None;
    }
    Some(layers)
}

/// Complete digraph of shortest-path costs. Pairs with no path are omitted.
pub fn metric_completion(graph: &DirectedGraph) -> DirectedGraph {
    let n = graph.vertex_count();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in dist.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for e in graph.edges() {
        if e.cost < dist[e.tail][e.head] {
            dist[e.tail][e.head] = e.cost;
        }
    }
    for via in 0..n {
        for u in 0..n {
            let du = dist[u][via];
            if !du.is_finite() {
                continue;
            }
            for v in 0..n {
                let cand = du + dist[via][v];
                if cand < dist[u][v] {
                    dist[u][v] = cand;
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (u, row) in dist.iter().enumerate() {
        for (v, &d) in row.iter().enumerate() {
            if u != v && d.is_finite() {
                edges.push(Edge {
                    tail: u,
                    head: v,
                    cost: d,
                });
            }
        }
    }
    DirectedGraph::new(n, edges).expect("metric completion is a simple graph")
}
