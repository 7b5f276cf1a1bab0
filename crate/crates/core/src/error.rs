use thiserror::Error;

use crate::geom::Point3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("domain error in {op} at {at:?}")]
    Domain { op: &'static str, at: Point3 },

    #[error("gradient vanishes at vertex {vertex_id} (|grad| = {magnitude:e})")]
    DegenerateGradient { vertex_id: usize, magnitude: f64 },

    #[error("degenerate bounds: {0}")]
    Degenerate(String),

    #[error("no sign change along the normal at vertex {vertex_id:?}")]
    NoBracket { vertex_id: Option<usize> },

    #[error("density is not Hermitian-symmetric (max mismatch {mismatch:e})")]
    AsymmetricDensity { mismatch: f64 },

    #[error("density has {got} values but the quadrature has {expected} nodes")]
    NodeMismatch { expected: usize, got: usize },

    #[error("surface normals have not been attached")]
    NormalsMissing,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed mesh at line {line}: {message}")]
    Mesh { line: usize, message: String },

    #[error("{} vertices failed to converge", .0.len())]
    SolveFailed(Vec<usize>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
