use thiserror::Error;

/// Errors raised by the numerical and training layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ItrdError {
    /// Shapes of the operands are incompatible.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An iterative routine failed to converge or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A kernel matrix has (near) zero trace and cannot be normalized.
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// The input is outside the domain of the functional (e.g. not an NPD matrix).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid user-supplied argument.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },
}

pub type Result<T> = std::result::Result<T, ItrdError>;
