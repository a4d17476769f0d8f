//! Seeded instance generators.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Edge, KdstInstance, SubgraphInstance, VertexId};

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Strictly layered DAG with the root in layer 0 and terminals in layer
    /// `layers`. Every terminal gets `k` planted vertex-disjoint paths.
    LayeredDag {
        n: usize,
        layers: usize,
        edge_prob: f64,
        cost_min: f64,
        cost_max: f64,
        #[serde(default = "default_true")]
        integer_costs: bool,
        k: usize,
        #[serde(default = "default_one")]
        terminals: usize,
    },
    /// Root, `width` middle vertices and one terminal; unit costs, `D = 2`.
    DiamondFamily { width: usize, k: usize },
    /// A single path of `length` edges to one terminal, `k = 1`,
    /// `D = length`. Costs are drawn from `1..=5` unless given.
    PathFamily {
        length: usize,
        #[serde(default)]
        costs: Option<Vec<f64>>,
    },
    /// Bidirected Hamiltonian cycle plus random chords; an unrooted instance.
    StrongDigraph {
        n: usize,
        k: usize,
        extra_prob: f64,
        terminals: usize,
        #[serde(default = "default_cost_min")]
        cost_min: f64,
        #[serde(default = "default_cost_max")]
        cost_max: f64,
        #[serde(default)]
        depth_bound: Option<usize>,
    },
}

fn default_cost_min() -> f64 {
    1.0
}

fn default_cost_max() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedInstance {
    Rooted(KdstInstance),
    Subgraph(SubgraphInstance),
}

impl GeneratedInstance {
    pub fn to_text(&self) -> String {
        match self {
            Self::Rooted(i) => i.to_text(),
            Self::Subgraph(i) => i.to_text(),
        }
    }

    pub fn rooted(self) -> Result<KdstInstance> {
        match self {
            Self::Rooted(i) => Ok(i),
            Self::Subgraph(_) => Err(Error::Config("generator produces unrooted instances".into())),
        }
    }
}

impl GeneratorSpec {
    pub fn is_rooted(&self) -> bool {
        !matches!(self, Self::StrongDigraph { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let costs_ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        match *self {
            Self::LayeredDag {
                n,
                layers,
                edge_prob,
                cost_min,
                cost_max,
                k,
                terminals,
                ..
            } => {
                if k == 0 || layers == 0 || terminals == 0 {
                    return bad("layered-dag needs k, layers and terminals ≥ 1".into());
                }
                if k > 1 && layers < 2 {
                    return bad("layered-dag with k > 1 needs at least 2 layers".into());
                }
                let needed = 1 + k * (layers - 1) + terminals;
                if n < needed {
                    return bad(format!(
                        "layered-dag with k={}, layers={}, terminals={} needs n ≥ {}",
                        k, layers, terminals, needed
                    ));
                }
                if !(0.0..=1.0).contains(&edge_prob) {
                    return bad(format!("edge probability {} outside [0, 1]", edge_prob));
                }
                if !costs_ok(cost_min, cost_max) {
                    return bad(format!("bad cost range [{}, {}]", cost_min, cost_max));
                }
            }
            Self::DiamondFamily { width, k } => {
                if k == 0 || width < k {
                    return bad(format!("diamond-family needs 1 ≤ k ≤ width, got k={} width={}", k, width));
                }
            }
            Self::PathFamily { length, ref costs } => {
                if length == 0 {
                    return bad("path-family needs length ≥ 1".into());
                }
                if let Some(c) = costs {
                    if c.len() != length || c.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                        return bad("path-family costs must be `length` nonnegative numbers".into());
                    }
                }
            }
            Self::StrongDigraph {
                n,
                k,
                extra_prob,
                terminals,
                cost_min,
                cost_max,
                depth_bound,
            } => {
                if n < 3 || !(1..=2).contains(&k) {
                    return bad("strong-digraph needs n ≥ 3 and k ∈ {1, 2}".into());
                }
                if terminals < 2 || terminals > n {
                    return bad(format!("strong-digraph needs 2 ≤ terminals ≤ n, got {}", terminals));
                }
                if !(0.0..=1.0).contains(&extra_prob) {
                    return bad(format!("chord probability {} outside [0, 1]", extra_prob));
                }
                if !costs_ok(cost_min, cost_max) {
                    return bad(format!("bad cost range [{}, {}]", cost_min, cost_max));
                }
                if depth_bound == Some(0) {
                    return bad("depth bound must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

fn draw_cost(rng: &mut ChaCha8Rng, lo: f64, hi: f64, integer: bool) -> f64 {
    if integer {
        let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
        if lo >= hi {
            return lo.max(0) as f64;
        }
        rng.gen_range(lo..=hi) as f64
    } else if lo == hi {
        lo
    } else {
        // Three decimals keep instance files short.
        (rng.gen_range(lo..hi) * 1000.0).round() / 1000.0
    }
}

fn build_graph(
    n: usize,
    pairs: &BTreeSet<(VertexId, VertexId)>,
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
    integer: bool,
) -> Result<DirectedGraph> {
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(tail, head)| Edge {
            tail,
            head,
            cost: draw_cost(rng, lo, hi, integer),
        })
        .collect();
    DirectedGraph::new(n, edges)
}

/// Deterministic instance for `(spec, seed)`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<GeneratedInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        GeneratorSpec::LayeredDag {
            n,
            layers,
            edge_prob,
            cost_min,
            cost_max,
            integer_costs,
            k,
            terminals,
        } => {
            let mut sizes = vec![0usize; layers + 1];
            sizes[0] = 1;
            for s in sizes.iter_mut().take(layers).skip(1) {
                *s = k;
            }
            sizes[layers] = terminals;
            let mut spare = n - sizes.iter().sum::<usize>();
            let mut l = 1;
            while spare > 0 {
                sizes[l] += 1;
                spare -= 1;
                l = if l == layers { 1 } else { l + 1 };
            }
            let mut layer_vertices: Vec<Vec<VertexId>> = Vec::with_capacity(layers + 1);
            let mut next = 0;
            for &s in &sizes {
                layer_vertices.push((next..next + s).collect());
                next += s;
            }
            let terminal_list: Vec<VertexId> = layer_vertices[layers]
                .choose_multiple(&mut rng, terminals)
                .copied()
                .collect();

            let mut pairs = BTreeSet::new();
            for &t in &terminal_list {
                let chosen: Vec<Vec<VertexId>> = (1..layers)
                    .map(|l| layer_vertices[l].choose_multiple(&mut rng, k).copied().collect())
                    .collect();
                for j in 0..k {
                    let mut prev = 0;
                    for layer in &chosen {
                        pairs.insert((prev, layer[j]));
                        prev = layer[j];
                    }
                    pairs.insert((prev, t));
                }
            }
            for l in 0..layers {
                for &u in &layer_vertices[l] {
                    for &v in &layer_vertices[l + 1] {
                        if rng.gen::<f64>() < edge_prob {
                            pairs.insert((u, v));
                        }
                    }
                }
            }
            let graph = build_graph(n, &pairs, &mut rng, cost_min, cost_max, integer_costs)?;
            Ok(GeneratedInstance::Rooted(KdstInstance::new(
                graph,
                0,
                terminal_list,
                k,
                layers,
            )?))
        }
        GeneratorSpec::DiamondFamily { width, k } => {
            let t = width + 1;
            let mut edges = Vec::new();
            for m in 1..=width {
                edges.push(Edge { tail: 0, head: m, cost: 1.0 });
                edges.push(Edge { tail: m, head: t, cost: 1.0 });
            }
            let graph = DirectedGraph::new(width + 2, edges)?;
            Ok(GeneratedInstance::Rooted(KdstInstance::new(graph, 0, vec![t], k, 2)?))
        }
        GeneratorSpec::PathFamily { length, ref costs } => {
            let costs: Vec<f64> = match costs {
                Some(c) => c.clone(),
                None => (0..length).map(|_| rng.gen_range(1..=5) as f64).collect(),
            };
            let edges = (0..length).map(|i| Edge {
                tail: i,
                head: i + 1,
                cost: costs[i],
            });
            let graph = DirectedGraph::new(length + 1, edges)?;
            Ok(GeneratedInstance::Rooted(KdstInstance::new(graph, 0, vec![length], 1, length)?))
        }
        GeneratorSpec::StrongDigraph {
            n,
            k,
            extra_prob,
            terminals,
            cost_min,
            cost_max,
            depth_bound,
        } => {
            let mut order: Vec<VertexId> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut pairs = BTreeSet::new();
            for i in 0..n {
                let (u, v) = (order[i], order[(i + 1) % n]);
                pairs.insert((u, v));
                pairs.insert((v, u));
            }
            for u in 0..n {
                for v in 0..n {
                    if u != v && !pairs.contains(&(u, v)) && rng.gen::<f64>() < extra_prob {
                        pairs.insert((u, v));
                    }
                }
            }
            let graph = build_graph(n, &pairs, &mut rng, cost_min, cost_max, true)?;
            let mut vertices: Vec<VertexId> = (0..n).collect();
            vertices.shuffle(&mut rng);
            vertices.truncate(terminals);
            Ok(GeneratedInstance::Subgraph(SubgraphInstance::new(
                graph,
                vertices,
                k,
                depth_bound.unwrap_or(n - 1),
            )?))
        }
    }
}

/// Parameters of the `index`-th instance of the desk-scale suite. The suite
/// cycles through four shapes: `D = 3, k = 2`, `D = 2, k = 2`, `D = 3, k = 3`
/// and `D = 3, k = 1` with three terminals. All have at most 21 edges.
pub fn desk_suite_spec(index: usize) -> GeneratorSpec {
    let (n, layers, k, terminals, edge_prob) = match index % 4 {
        0 => (12, 3, 2, 5, 0.3),
        1 => (8, 2, 2, 2, 0.4),
        2 => (9, 3, 3, 1, 0.4),
        _ => (10, 3, 1, 3, 0.4),
    };
    GeneratorSpec::LayeredDag {
        n,
        layers,
        edge_prob,
        cost_min: 1.0,
        cost_max: 10.0,
        integer_costs: true,
        k,
        terminals,
    }
}

/// The `index`-th desk-suite instance, seeded by its index.
pub fn desk_suite_instance(index: usize) -> KdstInstance {
    generate(&desk_suite_spec(index), index as u64)
        .and_then(GeneratedInstance::rooted)
        .expect("desk-suite parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixtures::diamond, is_layered_dag, parse_instance, EdgeSetSolution};
    use crate::verify::max_flow_value;

    fn desk(seed: u64) -> KdstInstance {
        let spec = GeneratorSpec::LayeredDag {
            n: 10,
            layers: 3,
            edge_prob: 0.4,
            cost_min: 1.0,
            cost_max: 10.0,
            integer_costs: true,
            k: 2,
            terminals: 2,
        };
        generate(&spec, seed).unwrap().rooted().unwrap()
    }

    #[test]
    fn desk_suite_is_small() {
        for i in 0..100 {
            let inst = desk_suite_instance(i);
            assert!(inst.graph.edge_count() <= 24);
            assert!(inst.k <= 3 && inst.depth_bound <= 3);
        }
    }

    #[test]
    fn canonical_diamond() {
        let spec = GeneratorSpec::DiamondFamily { width: 2, k: 2 };
        assert_eq!(generate(&spec, 0).unwrap().rooted().unwrap(), diamond(2));
    }

    #[test]
    fn layered_is_deterministic_and_planted() {
        assert_eq!(desk(7), desk(7));
        for seed in 0..20 {
            let inst = desk(seed);
            assert!(is_layered_dag(&inst).is_some());
            assert!(inst.graph.edge_count() <= 21);
            let all = EdgeSetSolution::all(&inst.graph);
            for &t in &inst.terminals {
                assert!(max_flow_value(&inst.graph, &all, inst.root, t) >= 2);
            }
            let back = parse_instance(&inst.to_text()).unwrap().instance;
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn strong_digraph_is_two_connected() {
        let spec = GeneratorSpec::StrongDigraph {
            n: 8,
            k: 2,
            extra_prob: 0.2,
            terminals: 3,
            cost_min: 1.0,
            cost_max: 5.0,
            depth_bound: None,
        };
        let GeneratedInstance::Subgraph(inst) = generate(&spec, 4).unwrap() else {
            panic!("expected an unrooted instance")
        };
        let all = EdgeSetSolution::all(&inst.graph);
        for &s in &inst.terminals {
            for &t in &inst.terminals {
                if s != t {
                    assert!(max_flow_value(&inst.graph, &all, s, t) >= 2);
                }
            }
        }
        assert_eq!(inst.depth_bound, 7);
    }

    #[test]
    fn parameter_bounds() {
        let spec = GeneratorSpec::LayeredDag {
            n: 5,
            layers: 3,
            edge_prob: 0.4,
            cost_min: 1.0,
            cost_max: 10.0,
            integer_costs: true,
            k: 2,
            terminals: 2,
        };
        assert!(matches!(generate(&spec, 0), Err(Error::Config(_))));
        assert!(matches!(
            generate(&GeneratorSpec::DiamondFamily { width: 1, k: 2 }, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spec_json() {
        let text = r#"{"generator": "path-family", "length": 2, "costs": [2, 3]}"#;
        let spec: GeneratorSpec = serde_json::from_str(text).unwrap();
        let inst = generate(&spec, 0).unwrap().rooted().unwrap();
        assert_eq!(inst.graph.edges()[0].cost, 2.0);
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"generator": "nope"}"#).is_err());
    }
}
