use thiserror::Error;

/// Everything that can go wrong while building spaces, states, circuits or
/// queries. Variants carry enough context to name the violated invariant.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("state has squared norm {norm_sqr:.3e}, below the zero cutoff")]
    ZeroState { norm_sqr: f64 },

    #[error("state is not normalized: squared norm {norm_sqr} (pass normalize=true to rescale)")]
    NotNormalized { norm_sqr: f64 },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("objects live on different spaces: {0}")]
    SpaceMismatch(&'static str),

    #[error("unknown basis label {0:?}")]
    UnknownLabel(String),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("a space needs at least one basis label")]
    EmptySpace,

    #[error("spanning set is empty or contains only (near-)zero vectors")]
    EmptySpan,

    #[error("operator is not a projector: {0} defect exceeds tolerance")]
    NotAProjector(&'static str),

    #[error("operator is not unitary: defect {0:.3e} exceeds tolerance")]
    NotUnitary(f64),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("outcome {outcome:?} has probability {probability:.3e}; cannot collapse onto it")]
    ImpossibleOutcome { outcome: String, probability: f64 },

    #[error("post-selection never succeeds for this query (all branch weights vanish)")]
    ImpossiblePostSelection,

    #[error("conditional/marginal tables disagree on outcomes: missing {0:?}")]
    IncompleteTable(String),

    #[error("invalid decomposition input: {0}")]
    InvalidDecomposition(String),

    #[error("invalid circuit element: {0}")]
    InvalidElement(String),

    #[error("circuit has no which-way coupler / ancilla, but one is required here")]
    NoAncilla,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("cannot estimate from an empty sample (shots = 0)")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
