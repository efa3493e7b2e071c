use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("construction refused: {0}")]
    Refused(Diagnostic),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn refused(d: Diagnostic) -> Self {
        Error::Refused(d)
    }

    pub fn diagnostic(&self) -> Option<&Diagnostic> {
        match self {
            Error::Refused(d) => Some(d),
            _ => None,
        }
    }
}

/// Why a construction could not proceed, in machine-readable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    /// Stage (1-based) at which the construction stopped, when meaningful.
    pub stage: Option<usize>,
    pub details: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    /// The kernel/curve pair does not satisfy the positivity condition the
    /// construction relies on (e.g. mass concentration fails).
    ConditionFailed,
    /// The parameter search reached the floor on 1 − r.
    RadiusFloor,
    /// A construction needs more resolution than the configured cap.
    ResolutionCap,
    /// A rare-sequence prefix is too short or too dense for the requested stage.
    SequenceTooShort,
    /// Enumerating the object would exceed the configured work budget.
    Budget,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), stage: None, details: BTreeMap::new() }
    }

    pub fn at_stage(mut self, stage: usize) -> Self {
        self.stage = Some(stage);
        self
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.to_owned(), v);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}", self.code, self.message)?;
        if let Some(s) = self.stage {
            write!(f, " (stage {s})")?;
        }
        Ok(())
    }
}
