use crate::torus::TorusPoint;

/// Errors raised by the numerical routines.
///
/// Variants carry enough context to be recorded in experiment artifacts;
/// none of them is fatal to a batch run.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid map spec: {0}")]
    InvalidSpec(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate splitting at {point:?}: {reason}")]
    DegenerateSplitting { point: Vec<f64>, reason: String },

    /// Leaf integration stopped early; `partial` holds the vertices built so far.
    #[error("leaf growth failed after {} vertices: {reason}", partial.len())]
    LeafGrowthFailure {
        reason: String,
        partial: Vec<TorusPoint>,
    },

    #[error("disc construction failed: {0}")]
    DiscConstructionFailure(String),

    /// More than one crossing between a strong leaf and a center-unstable disc.
    #[error("leaf crosses disc {crossings} times; not in the unique-crossing regime")]
    NonCylinderRegime { crossings: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
