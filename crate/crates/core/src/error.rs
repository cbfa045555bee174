use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario field violates its invariant. `field` is the config path
    /// of the first violation found.
    #[error("invalid scenario: {field}: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("overdispersion violation: variance {var} must exceed mean {mean}")]
    Overdispersion { mean: f64, var: f64 },

    #[error("quantile is unbounded for p = {0} (requires p < 1)")]
    UnboundedQuantile(f64),

    #[error("quantile scan for p = {p} exceeded the safety cap {cap}")]
    QuantileCapExceeded { p: f64, cap: u64 },

    #[error("stationary distribution is not unique (reducible chain)")]
    MultipleStationary,

    #[error("critical ratio undefined: lost-sales and spoilage costs are both zero")]
    UndefinedCriticalRatio,

    #[error("mean shortage fraction {0} >= 1: no expected delivery")]
    TotalShortage(f64),

    #[error("optimizer aborted: {0}")]
    Optimizer(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("degenerate demand history: all observations are zero")]
    DegenerateDemand,

    #[error("too few demand observations: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("csv error at row {row}: {message}")]
    CsvRow { row: usize, message: String },

    #[error("policy failed at period {period}: {source}")]
    PolicyFailure {
        period: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Exit code the CLI maps this error to: 2 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidScenario { .. }
            | Error::ConfigParse(_)
            | Error::CsvRow { .. }
            | Error::InsufficientHistory(_)
            | Error::TooFewSamples { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
