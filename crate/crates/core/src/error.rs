use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hazard specification: {0}")]
    InvalidSpec(String),

    #[error("geometric tail series diverges (tail increment {0})")]
    DivergentSeries(f64),

    #[error("truncation point {y_plus} must exceed {bound}")]
    Truncation { y_plus: u32, bound: u32 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dataset has no uncensored observations")]
    Unfittable,

    #[error("total duration exceeded {0} steps without an event")]
    RunawayDuration(u64),

    #[error("mean total duration did not converge within {0} terms")]
    NonConvergentMean(usize),

    #[error("summary needs at least two converged replications, got {0}")]
    TooFewConverged(usize),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
