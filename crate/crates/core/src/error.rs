use thiserror::Error;

use crate::graph::UserId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph is not weakly connected ({components} components); extract the giant component first")]
    Disconnected { components: usize },

    #[error("graph has {nodes} nodes, at least {needed} required")]
    TooSmall { nodes: usize, needed: usize },

    #[error("node {0} has no side label")]
    UnlabeledNode(UserId),

    #[error("side {side} has {found} nodes, at least {needed} required")]
    SideTooSmall {
        side: &'static str,
        found: usize,
        needed: usize,
    },

    #[error("no walk started on side {0} can reach a hub")]
    Unabsorbable(&'static str),

    #[error("iterative solver stopped at residual {residual:e} after {iterations} sweeps")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("seed users are split evenly between the two polarities ({0} vs {0})")]
    SeedConflict(usize),

    #[error("no usable seed users: every seed is missing or non-extreme")]
    NoUsableSeeds,
}
