use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    SvdConvergence { sweeps: usize, residual: f64 },
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
