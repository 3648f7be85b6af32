use thiserror::Error;

/// Errors raised by the analysis, simulation and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("degenerate sources: mu_x == mu_y")]
    DegenerateSources,

    #[error("phase slice contains no pulse pairs")]
    EmptySlice,

    #[error("phase-flip bound undefined: single-photon counting rate lower bound is zero")]
    UndefinedBound,

    #[error("raw key is empty")]
    EmptyKey,

    #[error("finite-size bound collapsed: {0}")]
    BoundCollapse(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("reference window has no detections")]
    EmptyWindow,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no rising edge found: peak {peak} does not exceed noise floor {floor}")]
    NoEdge { peak: f64, floor: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            value,
            expected: "[0, 1]",
        })
    }
}

pub(crate) fn check_open_unit(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            value,
            expected: "(0, 1)",
        })
    }
}
