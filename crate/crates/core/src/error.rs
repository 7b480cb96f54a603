//! Crate-wide error type.

use alloc::string::String;

/// Errors produced by state, design, Fisher, sampling and estimator
/// operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {dim}")]
    InvalidDimension { dim: usize },

    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter vector has length {found}, chart dimension is {expected}")]
    ParamLengthMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max entrywise deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is not one (got {trace:.17e})")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("basis is not unitary (max entrywise deviation {deviation:.3e})")]
    InvalidBasis { deviation: f64 },

    #[error("effective rank exceeds {rank}: eigenvalue #{index} is {eigenvalue:.3e}")]
    RankMismatch {
        rank: usize,
        index: usize,
        eigenvalue: f64,
    },

    #[error("state is rank deficient: eigenvalue #{index} is {eigenvalue:.3e}")]
    RankDeficient { index: usize, eigenvalue: f64 },

    #[error("embedded matrix left the model (min eigenvalue {min_eigenvalue:.3e})")]
    OutOfModel { min_eigenvalue: f64 },

    #[error("support eigenvalue #{index} is {eigenvalue:.3e}; quantum Fisher needs a strictly positive spectrum")]
    SingularState { index: usize, eigenvalue: f64 },

    #[error("invalid setting label: {0}")]
    InvalidLabel(String),

    #[error("the identity observable carries no information and is rejected")]
    IdentityObservable,

    #[error("design has no settings")]
    EmptyDesign,

    #[error("design mixes setting kinds or dimensions")]
    MixedSettingKinds,

    #[error("requested {requested} distinct settings, only {available} exist")]
    NotEnoughSettings { requested: usize, available: usize },

    #[error("observable disagrees with the setting at position {position}")]
    IncompatibleObservable { position: usize },

    #[error("outcome {outcome} sits on the model boundary: probability {probability:.3e} with gradient norm {gradient_norm:.3e}")]
    BoundarySingularity {
        outcome: usize,
        probability: f64,
        gradient_norm: f64,
    },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("design is not identifiable (min Fisher eigenvalue {min_eigenvalue:.3e})")]
    NonIdentifiable { min_eigenvalue: f64 },

    #[error("parameter `{name}` out of range (got {value})")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("invalid outcome probabilities (sum {sum:.17e}, min {min:.3e})")]
    InvalidProbabilities { sum: f64, min: f64 },

    #[error("counts for setting {setting} sum to {found}, expected {expected}")]
    CountsMismatch {
        setting: usize,
        expected: u64,
        found: u64,
    },

    #[error("numerical failure in iteration {iteration}")]
    NumericalFailure { iteration: usize },

    #[error("no replicate produced an estimate")]
    NoSuccessfulReplicates,
}

pub type Result<T> = core::result::Result<T, Error>;
