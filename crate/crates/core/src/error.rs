use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("rank-one downdate lost positivity at column {column}")]
    DowndateFailure { column: usize },

    #[error("Jacobi eigenvalue iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid chain state: {0}")]
    InvalidState(String),

    #[error("target has no location/shape metadata")]
    MissingMetadata,

    #[error("target has no exact sampler")]
    NoExactSampler,

    #[error("no sign change of the mean-field trace in [{lo:e}, {hi:e}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input")]
    EmptyInput,

    #[error("iteration {iteration}: {source}")]
    Step {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },
}
