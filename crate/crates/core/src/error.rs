use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// Structured validation failure: one line per violated balance or
    /// schema rule, each carrying cell coordinates.
    #[error("validation failed with {} violation(s):\n{}", .0.len(), .0.join("\n"))]
    Validation(Vec<String>),

    #[error("linear solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    #[error("equilibrium diverged at iteration {iteration} (residual {residual:.3e} grew over {streak} consecutive iterations)")]
    Diverged {
        iteration: usize,
        residual: f64,
        streak: usize,
    },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Exit-code taxonomy used by the CLI: 0 ok, 1 validation/convergence,
    /// 2 I/O or usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::LinearSolve { .. }
            | Error::Diverged { .. }
            | Error::Invalid(_)
            | Error::Dimension(_) => 1,
            Error::Io(_) | Error::Csv(_) | Error::Toml(_) | Error::Scenario(_) => 2,
        }
    }
}
