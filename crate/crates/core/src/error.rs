use thiserror::Error;

use crate::params::LoadRegime;

/// Errors produced by parameter validation and the analytic/simulation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arrival rate `{name}` must be positive and finite, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("reveal delay must be positive and finite, got {0}")]
    NonPositiveDelay(f64),

    #[error("{regime} requires {condition}")]
    RegimeConditionViolated {
        regime: LoadRegime,
        condition: String,
    },

    #[error("confirmation threshold must be at least 2, got {0}")]
    InvalidThreshold(u64),

    #[error("adaptation period undefined for tip count {0} (needs L_h > 1.408)")]
    AdaptationUndefined(f64),

    #[error("tip set is empty")]
    EmptyTipSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse experiment spec: {0}")]
    SpecParse(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status for the command-line runner.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::SpecParse(_) | Self::SchemaMismatch(_) => 2,
            Self::Io(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
