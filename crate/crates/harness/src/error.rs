use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: faithkit::Error,
    },

    #[error("{0}")]
    AllFailed(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn core(context: impl Into<String>, source: faithkit::Error) -> Self {
        HarnessError::Core {
            context: context.into(),
            source,
        }
    }

    /// 1 for numeric failures, 2 for usage and I/O problems.
    pub fn exit_code(&self) -> i32 {
        use faithkit::Error as E;
        match self {
            HarnessError::AllFailed(_) => 1,
            HarnessError::Core {
                source: E::NonFinite(_) | E::DegenerateData(_) | E::Numeric(_) | E::Undefined(_),
                ..
            } => 1,
            _ => 2,
        }
    }
}
