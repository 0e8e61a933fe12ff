use std::fmt;

/// Errors produced by model construction, evaluation and scenario handling.
#[derive(Debug, Clone)]
pub enum Error {
    /// A constructor argument violates its precondition.
    InvalidParameter { what: &'static str, detail: String },
    /// An evaluation argument lies outside the model's domain.
    OutOfDomain { what: &'static str, value: f64 },
    /// A scenario file or in-memory configuration failed validation.
    /// `field` is the dotted path of the offending entry.
    InvalidScenario { field: String, detail: String },
    /// A runtime invariant of a simulation was violated.
    Invariant { context: String, detail: String },
    /// A requested computation was refused (e.g. a lattice sweep too large).
    Refused { detail: String },
    /// Inputs to a comparison do not share a common domain.
    DomainMismatch { detail: String },
    /// File or serialization error while emitting outputs.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { what, detail } => {
                write!(f, "invalid parameter {what}: {detail}")
            }
            Error::OutOfDomain { what, value } => {
                write!(f, "{what} = {value} is outside the model domain")
            }
            Error::InvalidScenario { field, detail } => {
                write!(f, "scenario field `{field}`: {detail}")
            }
            Error::Invariant { context, detail } => {
                write!(f, "invariant violated in {context}: {detail}")
            }
            Error::Refused { detail } => write!(f, "refused: {detail}"),
            Error::DomainMismatch { detail } => write!(f, "domain mismatch: {detail}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
