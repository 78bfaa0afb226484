use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point is off the quadric (|Ψ(z,z) - c| = {deviation:e})")]
    NotOnQuadric { deviation: f64 },
    #[error("vector is not horizontal (|Ψ(v,z)| = {deviation:e})")]
    NotHorizontal { deviation: f64 },
    #[error("invalid family specification: {0}")]
    Spec(String),
    #[error("degenerate chart: {0}")]
    Chart(String),
    #[error("finite-difference stencil leaves the chart domain: {0}")]
    Domain(String),
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
