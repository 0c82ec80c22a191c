use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("entry ({row}, {col}) out of range for a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("bad coefficient at {location:?}: {reason}")]
    Coefficient { location: [f64; 2], reason: String },

    #[error("observation value {value:e} at node {node} is below the floor {floor:e}")]
    PsiBelowFloor { node: usize, value: f64, floor: f64 },

    #[error("lumped mass vanishes at node {0}")]
    ZeroLumpedMass(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
