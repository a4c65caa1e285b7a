use std::fmt;

use thiserror::Error;

/// A single violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidParameter {
    pub field: String,
    pub constraint: String,
}

impl InvalidParameter {
    pub fn new(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

impl fmt::Display for InvalidParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {0}")]
    InvalidParameter(InvalidParameter),

    #[error("invalid configuration: {}", join(.0))]
    Invalid(Vec<InvalidParameter>),

    #[error("arrays are defined on different frequency grids")]
    GridMismatch,

    #[error("grid cannot be resolved: {0}")]
    GridUnresolvable(String),

    #[error("sample rate {sample_rate} Hz is below the required {required} Hz")]
    NyquistViolation { sample_rate: f64, required: f64 },

    #[error("invalid pulse shape: {0}")]
    InvalidShape(String),

    #[error("non-finite population in bin {bin}")]
    NonFiniteState { bin: usize },

    #[error("hyperfine constant of the {0} level is zero")]
    ZeroHyperfineConstant(&'static str),

    #[error("no hole feature found (depth {depth:.3e} below 5x noise {noise:.3e})")]
    NoFeatureFound { depth: f64, noise: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("mismatched sampling: {0}")]
    MismatchedSampling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(items: &[InvalidParameter]) -> String {
    items
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<InvalidParameter> for Error {
    fn from(p: InvalidParameter) -> Self {
        Error::InvalidParameter(p)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
