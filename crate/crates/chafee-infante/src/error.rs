//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mode index {index} out of range 1..={modes}")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("coefficient vector has length {got}, domain retains {expected} modes")]
    CoefficientLength { got: usize, expected: usize },

    #[error("covariance violates the trace condition: {0}")]
    TraceCondition(String),

    #[error("time {0} is not a multiple of the path step")]
    OffGrid(f64),

    #[error("window [{lo}, {hi}] exceeds the sampled path extent [{have_lo}, {have_hi}]")]
    WindowExceeded {
        lo: f64,
        hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("solution blew up at t = {time} (H-norm {norm:.3e})")]
    BlowUp { time: f64, norm: f64 },

    #[error("pullback did not synchronize by depth {depth} (H-diameter {diameter:.3e})")]
    NoSynchronization { depth: f64, diameter: f64 },

    #[error(
        "rejection sampling exhausted after {trials} trials \
         (smallest sup V-norm observed {smallest:.3e})"
    )]
    RejectionExhausted { trials: u64, smallest: f64 },

    #[error("wedge grade mismatch: expected {expected}, got {got}")]
    GradeMismatch { expected: usize, got: usize },

    #[error("degenerate tangent frame: stretching factor underflow")]
    DegenerateFrame,

    #[error("series did not converge within {max_terms} terms")]
    SeriesDivergence { max_terms: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
