use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scalar root solve did not converge for {family} at x = {x}")]
    RootNotConverged { family: &'static str, x: f64 },
    #[error("non-elliptic coefficients: a = {a_min} at node {node}")]
    NonElliptic { a_min: f64, node: usize },
    #[error("mesh-Peclet restriction h*|b-c| <= 2*a violated at node {node}: h*|b-c| = {lhs}, 2*a = {rhs}")]
    Peclet { node: usize, lhs: f64, rhs: f64 },
    #[error("singular linear system (pivot {pivot} at row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error("eigen-solver failed to converge")]
    Eigen,
    #[error("inner solver exceeded {max_inner} iterations (residual {residual}, contraction estimate {contraction})")]
    MaxInner { max_inner: usize, residual: f64, contraction: f64 },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
