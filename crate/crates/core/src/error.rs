use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate dispersion: {0}")]
    DegenerateDispersion(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize, last: Vec<f64> },

    #[error("separation detected: {0}")]
    Separation(String),

    #[error("no finite MLE: {0}")]
    NoFiniteMle(String),

    #[error("nesting violation: {0}")]
    NestingViolation(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("boundary estimate: {0}")]
    Boundary(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, StatError>;

impl StatError {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        StatError::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for StatError {
    fn from(e: std::io::Error) -> Self {
        StatError::Io(e.to_string())
    }
}

impl From<csv::Error> for StatError {
    fn from(e: csv::Error) -> Self {
        StatError::Parse(e.to_string())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(StatError::Domain(format!("delta must lie in (0,1), got {delta}")))
    }
}
