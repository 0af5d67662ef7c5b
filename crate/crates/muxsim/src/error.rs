use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("invalid feedback: {0}")]
    InvalidFeedback(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("degenerate allocation weights: {0}")]
    DegenerateWeights(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("unknown allocator '{0}'")]
    UnknownAllocator(String),

    #[error("scenario validation failed:\n{}", .0.join("\n"))]
    InvalidScenario(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    #[error("trace error: {0}")]
    Trace(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input (config, trace, scenario),
    /// which map to CLI exit code 2 rather than 1.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidScenario(_)
                | Error::Config(_)
                | Error::Trace(_)
                | Error::UnknownAllocator(_)
                | Error::MissingData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
