use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Rank probabilities only have a closed form for the min-loss pick.
    #[error(
        "no closed-form rank probabilities for order index {order_index} with batch fraction {batch_fraction}; \
         estimate them from empirical pick frequencies"
    )]
    UnsupportedClosedForm {
        order_index: usize,
        batch_fraction: f64,
    },

    #[error("iterate diverged at step {step} (norm {norm:.3e})")]
    Diverged { step: usize, norm: f64 },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors that stem from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::Degenerate(_))
    }
}
