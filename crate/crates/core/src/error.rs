use thiserror::Error;

use crate::algebra::AlgebraError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("Hamiltonian is not self-adjoint")]
    NotSelfAdjoint,
    #[error("noise weight for row '{row}' on port '{port}' is not real: {value}")]
    ComplexNoiseWeight { row: String, port: String, value: String },
    #[error("closure failure: {0}")]
    Closure(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coefficient matrix is singular (rank {rank} of {dim})")]
    Singular { rank: usize, dim: usize },
    #[error("eigenvalue solver did not converge")]
    EigenFailure,
    #[error("resolvent is singular at w = {w} rad/s")]
    SingularResolvent { w: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("state blew up at step {step}")]
    BlowUp { step: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing parameter '{0}'")]
    MissingParameter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("noise model: {0}")]
    Noise(String),
}
