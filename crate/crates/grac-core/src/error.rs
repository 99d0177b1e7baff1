use thiserror::Error;

use crate::mesh::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty index set")]
    EmptySet,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh violates {0:?}")]
    Mesh(Vec<Violation>),
    #[error("mesh operation rejected: {0}")]
    MeshOp(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("stability failure: {0}")]
    Stability(String),
}

pub type Result<T> = std::result::Result<T, Error>;
