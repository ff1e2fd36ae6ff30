//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by state construction, circuit compilation, and the
/// counting/fitting pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("mode `{label}` is invalid: {reason}")]
    InvalidMode { label: String, reason: String },

    #[error("states belong to different mode registries")]
    RegistryMismatch,

    #[error("amplitude matrix is zero (total destructive cancellation)")]
    ZeroState,

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mode index {index} out of range for {modes} modes")]
    IndexOutOfRange { index: usize, modes: usize },

    #[error("bunched term requested through the coincidence accessor (j == k == {0})")]
    DiagonalCoincidence(usize),

    #[error("components within stage {stage} act on overlapping modes (mode `{label}`)")]
    StageOverlap { stage: usize, label: String },

    #[error("component is invalid: {0}")]
    InvalidComponent(String),

    #[error("circuit has no photon-pair sources")]
    MissingSources,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("residual amplitude {residual:.3e} outside the requested mode subset")]
    ResidualAmplitude { residual: f64 },

    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
}

/// Failures of the nonlinear least-squares fitters.
#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("samples span {span:.4} but the fitted period is {period:.4}; need at least one full period")]
    InsufficientSpan { span: f64, period: f64 },

    #[error("no dominant oscillation found in the data")]
    NoDominantFrequency,

    #[error("no dip found (fitted visibility {visibility:.4} <= 0)")]
    DipNotFound { visibility: f64 },

    #[error("model does not describe the data (wing residual {wing_residual:.3} of baseline)")]
    ModelMismatch { wing_residual: f64 },

    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
