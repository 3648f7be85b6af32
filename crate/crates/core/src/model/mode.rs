use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Whether statistical fluctuations are accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Observed counts are taken as their expectations.
    Asymptotic,
    /// Chernoff bounds on every estimated quantity, plus the key-length
    /// correction `gamma'`.
    Finite,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Asymptotic => "asymptotic",
            Mode::Finite => "finite",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "asymptotic" => Ok(Mode::Asymptotic),
            "finite" => Ok(Mode::Finite),
            other => Err(Error::Parse(format!(
                "unknown mode `{other}` (expected asymptotic or finite)"
            ))),
        }
    }
}
