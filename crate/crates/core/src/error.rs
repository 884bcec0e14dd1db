use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or spec value violates its invariant.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    /// A trace, prior or results file could not be parsed.
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A trace with no usable samples.
    #[error("trace `{0}` has no samples")]
    EmptyTrace(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An aggregate or statistical test was handed no data.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A session of an experiment failed; identifies the cell of the sweep.
    #[error("session (policy={policy}, trace={trace}, seed={seed}) failed: {source}")]
    Session {
        policy: String,
        trace: String,
        seed: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
