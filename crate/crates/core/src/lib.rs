//! Approximation algorithm for the k-edge-connected directed Steiner tree
//! problem (k-DST) on depth-bounded instances.
//!
//! The pipeline enumerates all simple rooted paths of length at most `D`,
//! solves a strengthened path-based LP relaxation, embeds the fractional
//! solution onto the suffix tree of those paths, and rounds it with repeated
//! randomized tree rounding. The union of the rounds is mapped back onto the
//! input graph.
//!
//! Besides the algorithm itself the crate ships the machinery needed to check
//! it: a bounded-variable revised simplex solver, max-flow verification, an
//! exact branch-and-bound oracle, a min-cost-flow baseline, checkers for the
//! structural properties of minimal solutions, instance generators and an
//! experiment runner.

pub mod error;
pub mod graph;
pub mod harness;
pub mod lp;
pub mod paths;
pub mod rounding;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{
    cost, is_layered_dag, metric_completion, parse_instance, parse_instance_with, DirectedGraph,
    Edge, EdgeId, EdgeSetSolution, KdstInstance, ParallelPolicy, ParseOptions, ParsedInstance,
    SubgraphInstance, VertexId,
};
pub use lp::{
    build_lp_gst, build_lp_kdst, build_lp_kdst_star, embed_solution, restrict_solution, GstLp,
    GstPoint, KdstLp, LinearProgram, LpSolution, LpStatus, Relation, VarId, VarTag,
};
pub use paths::{build_gst_tree, enumerate_paths, map_tree_edges_to_graph, GstTree, PathId, PathSpace, RootedPath};
pub use rounding::{
    gkr_round, monotonize, run_algorithm_dst, run_algorithm_kdst, run_steiner_subgraph,
    RoundingConfig, RoundingTranscript,
};
pub use simplex::{solve, SolverConfig};
pub use verify::{
    baseline_t_approx, check_minimal_lemmas, exact_opt, max_flow_value, minimalize, verify,
    VerificationReport,
};
