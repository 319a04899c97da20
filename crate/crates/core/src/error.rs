//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation at construction time.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// An input contained NaN or infinity where a finite value is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// The activation function F is undefined for the selected rule.
    #[error("rule `{rule}` defines the gain directly and has no activation function")]
    NoActivation { rule: &'static str },

    /// A gain came out non-positive (possible only at the alpha = 1
    /// boundary of the improved-proportionate rule with exactly-zero taps).
    #[error("gain for tap {tap} is not strictly positive ({value})")]
    DegenerateGain { tap: usize, value: f64 },

    /// A filter run or moment recursion blew past the divergence threshold.
    #[error("diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    /// Every run in an ensemble diverged; there is nothing to average.
    #[error("all {n_runs} runs diverged")]
    AllRunsDiverged { n_runs: usize },

    /// Second-moment recursion is unstable at the requested step size.
    #[error("mean-square recursion unstable: spectral radius of F is {spectral_radius:.6} >= 1")]
    Unstable { spectral_radius: f64 },

    /// A linear solve hit a singular matrix.
    #[error("singular matrix in {context}")]
    Singular { context: &'static str },

    /// A learning curve has not plateaued, so its tail is not a
    /// steady-state estimate.
    #[error("curve not converged: {drift_db:.3} dB drift over the last quarter exceeds {threshold_db:.3} dB")]
    NotConverged { drift_db: f64, threshold_db: f64 },

    /// Empirical gain-moment estimation was given no samples.
    #[error("empirical gain moments require at least one weight sample")]
    EmptyEnsemble,

    /// A config file failed to parse or validate.
    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the CLI: 1 for usage/config problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::Config { .. }
            | Error::Io(_) => 1,
            _ => 2,
        }
    }
}
