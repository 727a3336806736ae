use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state whose norm fell below the renormalisation floor. For linear
    /// trajectories this is a collapsed path; for nonlinear ones it usually
    /// means `dt` is too large.
    #[error("state norm {norm:e} is below the normalisation floor")]
    ZeroNorm { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The top Fock level of a truncated oscillator carries too much weight.
    #[error("Fock truncation too small: top-level population {population:e} exceeds 1e-8")]
    TruncationTooSmall { population: f64 },

    #[error("the delta kernel has no pointwise value; use its covariance discretisation")]
    DeltaNotPointwise,

    #[error("covariance is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("kernel not supported here: {0}")]
    UnsupportedKernel(String),

    /// The Riccati coefficient passed the overflow guard.
    #[error("F(t) diverged at t = {time}")]
    FDiverged { time: f64 },

    #[error("not supercritical: gamma = {gamma} >= 2 lambda^2 = {threshold}")]
    NotSupercritical { gamma: f64, threshold: f64 },

    #[error("invalid O-operator ansatz: {0}")]
    InvalidAnsatz(String),

    #[error("model/estimator mismatch: {0}")]
    ModelEstimatorMismatch(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("at least two samples are needed, got {0}")]
    InsufficientSamples(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("path {path} failed at step {step}: {source}")]
    PathFailed {
        path: u64,
        step: usize,
        #[source]
        source: Box<Error>,
    },
}
