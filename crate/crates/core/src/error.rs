use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: negative cost {cost} on edge {tail}->{head}")]
    NegativeCost {
        line: usize,
        tail: VertexId,
        head: VertexId,
        cost: f64,
    },
    #[error("root {0} is listed as a terminal")]
    RootIsTerminal(VertexId),
    #[error("connectivity k must be at least 1, got {0}")]
    InvalidConnectivity(i64),
    #[error("depth bound D must be at least 1, got {0}")]
    InvalidDepthBound(i64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parallel edge {tail}->{head} (use --split-parallel to subdivide extra copies)")]
    ParallelEdge { tail: VertexId, head: VertexId },
    #[error("edge id {0} does not exist in the graph")]
    UnknownEdge(EdgeId),

    #[error("path enumeration exceeded the cap of {cap} paths (reached {reached})")]
    PathBlowup { cap: usize, reached: usize },
    #[error("terminal {0} unreachable within D hops")]
    TerminalUnreachable(VertexId),
    #[error("linear program exceeds the constraint cap of {cap} rows")]
    ConstraintCap { cap: usize },

    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("simplex did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("simplex lost numerical accuracy: {0}")]
    Numerical(String),

    #[error("instance infeasible: terminal {terminal} has only {lambda} edge-disjoint paths, needs {k}")]
    Infeasible {
        terminal: VertexId,
        lambda: usize,
        k: usize,
    },
    #[error("rounding produced no feasible union after {attempts} attempts")]
    RestartsExhausted { attempts: usize },
    #[error("instance too large for the exact oracle: {edges} edges (limit {limit})")]
    ExactTooLarge { edges: usize, limit: usize },

    #[error("MPS parse error at line {line}: {message}")]
    Mps { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TerminalUnreachable(_) | Error::LpInfeasible | Error::Infeasible { .. } => 2,
            Error::PathBlowup { .. }
            | Error::ConstraintCap { .. }
            | Error::NonConvergence { .. }
            | Error::ExactTooLarge { .. }
            | Error::RestartsExhausted { .. } => 3,
            Error::Syntax { .. }
            | Error::NegativeCost { .. }
            | Error::RootIsTerminal(_)
            | Error::InvalidConnectivity(_)
            | Error::InvalidDepthBound(_)
            | Error::InvalidGraph(_)
            | Error::ParallelEdge { .. }
            | Error::UnknownEdge(_)
            | Error::Mps { .. }
            | Error::Config(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
