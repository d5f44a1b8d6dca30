//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("meshes are not a nested coarse/fine pair: {0}")]
    NotNested(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    SolverNotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("singular matrix in {0}")]
    SingularMatrix(String),

    #[error("near-singular Schur denominator {denominator:.3e}; time step is likely too large")]
    NearSingularSchur { denominator: f64 },

    #[error("time step {step_index} failed: {source}")]
    StepFailed {
        step_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("study error: {0}")]
    Study(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
