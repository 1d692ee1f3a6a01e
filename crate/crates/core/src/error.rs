use thiserror::Error;

use crate::mesh::MeshError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("no Dirichlet constraints: the structure is free to move rigidly")]
    Unconstrained,

    #[error("missing prescribed value for boundary vertex {0}")]
    MissingBoundaryValue(usize),

    #[error("linear solve failed: {reason} (relative residual {residual:e})")]
    SolverBreakdown { reason: String, residual: f64 },

    #[error("patch around cell {cell} is ill-conditioned (condition number {condition:e})")]
    IllConditionedPatch { cell: usize, condition: f64 },

    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed results file, line {line}: {message}")]
    Format { line: u64, message: String },
}
