//! Error type shared by all stages.

/// Errors produced by the solver pipeline.
///
/// The CLI maps these onto exit codes: configuration problems exit 2, solver
/// failures exit 3, and inconclusive verdicts (threshold ties, ambiguous
/// cutoffs) exit 4.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// A Hamiltonian model failed validation (exponent range, coefficients).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A domain failed validation (radii ordering, dimension).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A run configuration is malformed. The message names the offending field.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The shooting solver could not locate or polish a solution.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A profile is numerically degenerate (grazing zero, non-simple crossing).
    #[error("degenerate profile: {0}")]
    Degenerate(String),

    /// A verdict cannot be called at the configured tolerances.
    #[error("inconclusive: {0}")]
    Ambiguous(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A stored artifact (CSV, report) does not parse back.
    #[error("malformed artifact: {0}")]
    Artifact(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
