use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("gradient check failed for {}", blocks.join(", "))]
    GradCheck { blocks: Vec<String> },
    #[error(transparent)]
    Core(#[from] mvcl_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 bad input, 3 IO, 4 divergence, 5 gradient check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::GradCheck { .. } => 5,
            Error::Core(e) if diverged(e) => 4,
            _ => 2,
        }
    }
}

fn diverged(e: &mvcl_core::Error) -> bool {
    match e {
        mvcl_core::Error::NumericDivergence { .. } | mvcl_core::Error::Numeric(_) => true,
        mvcl_core::Error::Benchmark { source, .. } => diverged(source),
        _ => false,
    }
}
