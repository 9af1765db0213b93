use thiserror::Error;

pub type Result<T> = std::result::Result<T, RenError>;

#[derive(Debug, Error)]
pub enum RenError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("trim count {trim} leaves nothing to sum over {len} entries")]
    TrimTooLarge { trim: usize, len: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    PowerIteration { iterations: usize, last_estimate: f64 },

    #[error("projected gradient iterate became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("starting point is outside the l1 ball (norm {norm}, radius {radius})")]
    InfeasibleStart { norm: f64, radius: f64 },

    #[error("decoy model is degenerate: {0}")]
    DegenerateDecoy(String),

    #[error("refinement system is singular or ill-conditioned (condition number {condition})")]
    IllConditioned { condition: f64 },

    #[error("trace too short: need at least {needed} entries, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("malformed record: {0}")]
    Parse(String),
}
