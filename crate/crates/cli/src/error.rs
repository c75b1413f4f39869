use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] divsbl_core::Error),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: divsbl_core::Error,
    },

    #[error("nothing to emit: the sweep has no cells")]
    EmptySweep,

    #[error("cannot summarize an empty set of trials")]
    NoRecords,

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for filesystem failures, 1 for everything else (bad config or inputs).
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } => 2,
            Self::Core(e) | Self::Trial { source: e, .. } if e.is_io() => 2,
            _ => 1,
        }
    }
}
