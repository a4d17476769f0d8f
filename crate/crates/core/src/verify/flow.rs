//! Unit-capacity max flow (Dinic) and min-cost flow by successive shortest
//! paths, both over a subset of the edges of a [`DirectedGraph`].

use std::collections::VecDeque;

use crate::graph::{DirectedGraph, EdgeId, VertexId};

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: f64,
    /// Graph edge behind a forward arc; `None` for reverse arcs.
    origin: Option<EdgeId>,
}

/// Residual network with paired arcs: arc `2j` is forward, `2j + 1` its reverse.
#[derive(Debug, Clone)]
pub(crate) struct Network {
    n: usize,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    /// Unit-capacity network on the edges accepted by `cost_of`, which also
    /// supplies the arc cost.
    pub fn new(graph: &DirectedGraph, mut cost_of: impl FnMut(EdgeId) -> Option<f64>) -> Self {
        let n = graph.vertex_count();
        let mut net = Self {
            n,
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        };
        for (id, e) in graph.edges().iter().enumerate() {
            if let Some(c) = cost_of(id) {
                net.adj[e.tail].push(net.arcs.len());
                net.arcs.push(Arc {
                    to: e.head,
                    cap: 1,
                    cost: c,
                    origin: Some(id),
                });
                net.adj[e.head].push(net.arcs.len());
                net.arcs.push(Arc {
                    to: e.tail,
                    cap: 0,
                    cost: -c,
                    origin: None,
                });
            }
        }
        net
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.n];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap > 0 && level[arc.to] < 0 {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, level: &[i64], next: &mut [usize]) -> bool {
        if u == t {
            return true;
        }
        while next[u] < self.adj[u].len() {
            let a = self.adj[u][next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > 0 && level[to] == level[u] + 1 && self.augment(to, t, level, next) {
                self.arcs[a].cap -= 1;
                self.arcs[a ^ 1].cap += 1;
                return true;
            }
            next[u] += 1;
        }
        false
    }

    /// Pushes up to `limit` units from `s` to `t`; returns the amount pushed.
    pub fn max_flow(&mut self, s: VertexId, t: VertexId, limit: usize) -> usize {
        let mut flow = 0;
        while flow < limit {
            let level = self.levels(s);
            if level[t] < 0 {
                break;
            }
            let mut next = vec![0; self.n];
            while flow < limit && self.augment(s, t, &level, &mut next) {
                flow += 1;
            }
        }
        flow
    }

    /// Pushes up to `units` units along cheapest residual paths (Bellman-Ford,
    /// so negative reverse arcs are fine). Returns units pushed and total cost.
    pub fn min_cost_flow(&mut self, s: VertexId, t: VertexId, units: usize) -> (usize, f64) {
        let mut pushed = 0;
        let mut total = 0.0;
        while pushed < units {
            let mut dist = vec![f64::INFINITY; self.n];
            let mut via: Vec<Option<usize>> = vec![None; self.n];
            dist[s] = 0.0;
            for _ in 0..self.n {
                let mut changed = false;
                for u in 0..self.n {
                    if !dist[u].is_finite() {
                        continue;
                    }
                    for &a in &self.adj[u] {
                        let arc = &self.arcs[a];
                        let cand = dist[u] + arc.cost;
                        if arc.cap > 0 && cand < dist[arc.to] - 1e-12 {
                            dist[arc.to] = cand;
                            via[arc.to] = Some(a);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            let mut v = t;
            while v != s {
                let a = via[v].expect("shortest path tree reaches the sink");
                self.arcs[a].cap -= 1;
                self.arcs[a ^ 1].cap += 1;
                total += self.arcs[a].cost;
                v = self.arcs[a ^ 1].to;
            }
            pushed += 1;
        }
        (pushed, total)
    }

    /// Graph edges carrying one unit of flow.
    pub fn flow_edges(&self) -> Vec<EdgeId> {
        self.arcs
            .iter()
            .filter(|a| a.cap == 0)
            .filter_map(|a| a.origin)
            .collect()
    }

    /// Splits the current flow into edge-disjoint simple `s → t` paths.
    /// Flow cycles are dropped.
    pub fn disjoint_paths(&self, graph: &DirectedGraph, s: VertexId, t: VertexId) -> Vec<Vec<EdgeId>> {
        let mut out_flow: Vec<Vec<EdgeId>> = vec![Vec::new(); self.n];
        for e in self.flow_edges() {
            out_flow[graph.edge(e).tail].push(e);
        }
        for list in &mut out_flow {
            list.reverse();
        }
        let mut paths = Vec::new();
        while !out_flow[s].is_empty() {
            let mut path: Vec<EdgeId> = Vec::new();
            let mut seen_at = vec![usize::MAX; self.n];
            seen_at[s] = 0;
            let mut v = s;
            while v != t {
                let Some(e) = out_flow[v].pop() else { break };
                let w = graph.edge(e).head;
                if seen_at[w] != usize::MAX {
                    // Close a cycle: discard its edges.
                    for &f in &path[seen_at[w]..] {
                        seen_at[graph.edge(f).head] = usize::MAX;
                    }
                    path.truncate(seen_at[w]);
                    v = w;
                    continue;
                }
                path.push(e);
                seen_at[w] = path.len();
                v = w;
            }
            if v == t {
                paths.push(path);
            } else {
                break;
            }
        }
        paths
    }
}

/// Number of edge-disjoint `source → sink` paths using only edges accepted by
/// `keep`.
pub fn max_flow_filtered(
    graph: &DirectedGraph,
    keep: impl Fn(EdgeId) -> bool,
    source: VertexId,
    sink: VertexId,
) -> usize {
    if source == sink {
        return usize::MAX;
    }
    let mut net = Network::new(graph, |e| keep(e).then_some(0.0));
    net.max_flow(source, sink, usize::MAX)
}

/// Up to `k` edge-disjoint simple `source → sink` paths through the accepted
/// edges.
pub fn edge_disjoint_paths(
    graph: &DirectedGraph,
    keep: impl Fn(EdgeId) -> bool,
    source: VertexId,
    sink: VertexId,
    k: usize,
) -> Vec<Vec<EdgeId>> {
    let mut net = Network::new(graph, |e| keep(e).then_some(0.0));
    net.max_flow(source, sink, k);
    net.disjoint_paths(graph, source, sink)
}

/// Cheapest integral `k`-flow from `source` to `sink` on unit capacities.
/// `cost_of` returns `None` for unusable edges. Returns the cost and the
/// support, or `None` when fewer than `k` disjoint paths exist.
pub fn min_cost_k_flow(
    graph: &DirectedGraph,
    cost_of: impl FnMut(EdgeId) -> Option<f64>,
    source: VertexId,
    sink: VertexId,
    k: usize,
) -> Option<(f64, Vec<EdgeId>)> {
    let mut net = Network::new(graph, cost_of);
    let (pushed, cost) = net.min_cost_flow(source, sink, k);
    (pushed == k).then(|| (cost, net.flow_edges()))
}
