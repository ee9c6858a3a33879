use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("missing hours: {}", format_gaps(.0))]
    Gaps(Vec<usize>),

    #[error("duplicate timestamp for hour {hour} (row {row})")]
    Duplicate { hour: usize, row: usize },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing reference profile for building type `{0}`")]
    MissingProfile(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

fn format_gaps(gaps: &[usize]) -> String {
    const SHOWN: usize = 10;
    let mut parts: Vec<String> = gaps
        .iter()
        .take(SHOWN)
        .map(|h| format!("gap at hour {h}"))
        .collect();
    if gaps.len() > SHOWN {
        parts.push(format!("... ({} more)", gaps.len() - SHOWN));
    }
    parts.join(", ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error beneath any context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// Bad input data, as opposed to I/O or configuration problems.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Parse { .. }
                | Error::Header { .. }
                | Error::Gaps(_)
                | Error::Duplicate { .. }
                | Error::Invalid(_)
                | Error::LengthMismatch { .. }
                | Error::Infeasible(_)
        )
    }
}

pub(crate) fn ensure_same_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}
