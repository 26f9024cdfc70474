use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument or configuration; maps to CLI exit code 1.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("subcritical mean: m(0) = E[N] = {m0} is not > 1")]
    SubcriticalMean { m0: f64 },

    #[error("non-finite value while computing {what} at s = {s}")]
    NonFinite { what: &'static str, s: f64 },

    #[error("non-finite sample at generation {generation}, index {index} (weights {weights})")]
    Overflow { generation: usize, index: usize, weights: String },

    #[error("node cap {cap} exceeded: truncated at generation {generation}")]
    NodeCapExceeded { cap: usize, generation: usize },

    #[error("insufficient signal: only {usable} radii above the noise floor (need 3)")]
    InsufficientSignal { usable: usize },

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { field, reason: reason.into() }
    }

    /// True for errors caused by user input rather than by a failing computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. } | Error::Config(_) | Error::SubcriticalMean { .. })
    }
}
