use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line in an input file failed to parse.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    /// A reference to an id that does not exist in the corpus.
    #[error("unknown {kind} {id}")]
    UnknownId { kind: &'static str, id: String },

    /// Input values violate an operation's precondition.
    #[error("{0}")]
    InvalidInput(String),

    /// Configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A pipeline stage requires an artifact that is not on disk.
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    /// An internal invariant was violated; indicates a bug or corrupt state.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 2 for missing or malformed inputs,
    /// 3 for a bad configuration, 4 for a violated invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnknownId { .. }
            | Error::InvalidInput(_)
            | Error::MissingArtifact(_) => 2,
            Error::InvalidConfig(_) => 3,
            Error::Invariant(_) => 4,
        }
    }
}
