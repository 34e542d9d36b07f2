use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("position {x} cm is outside the furnace [0, {length}] cm")]
    OutsideFurnace { x: f64, length: f64 },

    #[error("invalid oven layout: {0}")]
    Layout(String),

    #[error("candidate list is empty")]
    NoCandidates,

    #[error("traces do not overlap in time")]
    EmptyOverlap,

    #[error("correlation is undefined for a zero-variance series")]
    ZeroVariance,

    #[error("trace needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("trace never exceeds {level} °C")]
    NoReflowInterval { level: f64 },

    #[error("trace exceeds {level} °C on {count} disjoint intervals")]
    DisjointReflow { level: f64, count: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}
