use std::path::{Path, PathBuf};

/// Exit codes shared by every subcommand.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input file; `line` is 1-based.
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dann_core::Error),
    #[error("{}: {source}", path.display())]
    Context {
        path: PathBuf,
        #[source]
        source: dann_core::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, line: u64, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) | CliError::Context { source: e, .. } => match e {
                dann_core::Error::DegenerateBandwidth(_) => EXIT_DEGENERATE,
                _ => EXIT_RUNTIME,
            },
            CliError::Io { .. } | CliError::Parse { .. } => EXIT_RUNTIME,
        }
    }
}

/// Argument validation failures from the core types become usage errors.
pub(crate) fn as_usage(e: dann_core::Error) -> CliError {
    match e {
        dann_core::Error::InvalidArgument(msg) | dann_core::Error::DegenerateBandwidth(msg) => {
            CliError::Usage(msg)
        }
        other => CliError::Core(other),
    }
}
