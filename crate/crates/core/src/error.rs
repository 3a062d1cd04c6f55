//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Failures raised while building inputs or evaluating bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FanoError {
    #[error("negative weight {weight} for outcome `{label}`")]
    NegativeWeight { label: String, weight: f64 },

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    SumNotOne { sum: f64, tolerance: f64 },

    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),

    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("weight for `{label}` is not a finite number")]
    NonFiniteWeight { label: String },

    #[error("distributions are defined over different outcome sets")]
    MismatchedOutcomeSets,

    #[error("Rényi order must be nonnegative, got {0}")]
    NegativeAlpha(f64),

    #[error("probability {0} is outside [0, 1]")]
    OutOfRangeProbability(f64),

    #[error("state space of {states} outcomes exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },

    #[error("candidate reconstruction set is empty")]
    EmptyCandidateSet,

    #[error("no exact volume formula for metric {metric} in dimension {dim}")]
    UnsupportedMetricForExact { metric: String, dim: usize },

    #[error("domain has zero or non-finite volume")]
    ZeroVolumeDomain,

    #[error("ball volume is zero; the bound denominator is undefined")]
    ZeroVolumeDenominator,

    #[error("order alpha = 1 must use the relative-entropy form")]
    AlphaIsOne,

    #[error("p_min = {p_min}, p_max = {p_max} violate 0 <= p_min < 1, 0 < p_max <= 1, p_min + p_max < 1")]
    BadPminPmax { p_min: f64, p_max: f64 },

    #[error("degenerate bound denominator: {0}")]
    DegenerateDenominator(String),

    #[error("inconsistent bounds: {0}")]
    InconsistentBounds(String),

    #[error("data processing violated: I(X;Xhat) = {i_xxhat} > I(X;Y) = {i_xy}")]
    DataProcessingViolation { i_xxhat: f64, i_xy: f64 },

    #[error("prior is not uniform (max deviation {0:e})")]
    NonUniformPrior(f64),

    #[error("reconstruction range differs from the range of X")]
    RangeMismatch,

    #[error("grid of {pairs} distribution pairs exceeds the cap of {cap}")]
    GridTooLarge { pairs: u128, cap: u64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("no feasible point in [0, 1]; inputs are inconsistent")]
    NoFeasiblePoint,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("no distance defined between `{0}` and `{1}`")]
    MissingDistance(String, String),

    #[error("label `{0}` is not a numeric coordinate vector")]
    NonNumericLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = FanoError> = std::result::Result<T, E>;
