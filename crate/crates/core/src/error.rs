use thiserror::Error;

/// Errors raised by the cavity library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is out of its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Every amplitude of a field is zero, so it cannot be normalized.
    #[error("degenerate field: all amplitudes are zero")]
    DegenerateField,

    /// `P(x_j) > 0` where `Q(x_j) = 0`; the relative entropy is infinite.
    #[error("relative entropy is infinite: reference vanishes at cell {cell} where p = {p:e}")]
    InfiniteDivergence { cell: usize, p: f64 },

    /// Two grids that must share a mesh do not.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// No solution was found for a tracked level inside its continuation window.
    #[error("level {level} lost at epsilon = {epsilon} (last good epsilon = {last_good:?})")]
    LevelLost { level: usize, epsilon: f64, last_good: Option<f64> },

    /// Both level assignments fall below the overlap threshold.
    #[error("ambiguous level tracking at epsilon = {epsilon}: best overlaps {overlaps:?}")]
    AmbiguousTracking { epsilon: f64, overlaps: [f64; 2] },

    /// Neither the strong nor the weak signature is present.
    #[error("indeterminate regime: {0}")]
    IndeterminateRegime(String),

    /// Root iteration did not converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for CavityError {
    fn from(e: std::io::Error) -> Self {
        CavityError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CavityError>;
