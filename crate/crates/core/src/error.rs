use thiserror::Error;

/// Errors raised by the matrix kernels, the problem model and the solvers.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("numeric failure in {op}: {detail}")]
    Numeric { op: &'static str, detail: String },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e} below {threshold:e}")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("constraint operator is rank deficient: pivot {pivot:e} at row {row} (max pivot {max_pivot:e})")]
    RankDeficient {
        row: usize,
        pivot: f64,
        max_pivot: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SdpError> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(SdpError::Dimension {
            context,
            expected,
            actual,
        })
    }
}
