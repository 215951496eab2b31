use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("view mismatch: {0}")]
    ViewMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("preprocessing statistics do not match the dataset: {0}")]
    StatsMismatch(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("labels are required for this operation")]
    LabelsRequired,
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),
    #[error("empty training set")]
    EmptyTrain,
    #[error("non-finite objective value: {0}")]
    Numeric(String),
    #[error("non-finite loss at iteration {iteration}")]
    NumericDivergence { iteration: usize },
    #[error("benchmark repeat {repeat} failed: {source}")]
    Benchmark {
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Dim(alloc::format!($($arg)*))
    };
}
pub(crate) use dim_err;
