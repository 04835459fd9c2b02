//! Error type shared across the engine.

/// Errors produced by the numerical engine.
///
/// The variants are deliberately coarse: callers branch on "bad input" vs
/// "bad matrix" vs "numerical breakdown", and the message carries the
/// specifics for humans and logs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs violate a documented precondition (non-finite entries, shape
    /// mismatches, non-positive prices, and similar).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that must be positive semi-definite has a significantly
    /// negative eigenvalue.
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },

    /// A matrix that must be invertible is singular to working precision.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A run configuration is structurally invalid (path counts, grid sizes,
    /// basis sizes, cash-flow times off the grid, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The computation broke down numerically (NaN propagation, diverging
    /// iterates).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor used by validation helpers.
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Returns an error if any value in `values` is not finite.
///
/// `what` names the offending quantity in the error message.
pub fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{what}[{i}] is not finite (value {v})"
            )));
        }
    }
    Ok(())
}
