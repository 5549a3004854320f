use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("iteration index must be at least {min}, got {k}")]
    InvalidIndex { k: usize, min: usize },

    #[error("momentum denominator k^alpha + r k^(alpha-1) = {value} is not positive at k={k}")]
    DegenerateDenominator { k: usize, value: f64 },

    #[error("(k-1)^(alpha-1) diverges at k={k} for alpha={alpha} < 1")]
    SingularCoefficient { k: usize, alpha: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is rank deficient (lambda_min={lambda_min:e}, lambda_max={lambda_max:e}); objective is not strongly convex")]
    RankDeficient { lambda_min: f64, lambda_max: f64 },

    #[error("step size s={step} outside (0, 1/L] with L={lipschitz}")]
    StepOutOfRange { step: f64, lipschitz: f64 },

    #[error("grid minimizer lies on the box boundary; enlarge the box")]
    BoxTooSmall,

    #[error("reference solve did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("variant {variant} cannot run on this problem: {reason}")]
    VariantMismatch { variant: &'static str, reason: String },

    #[error("non-finite iterate at k={k}")]
    Divergence { k: usize },

    #[error("trace too short: {len} entries, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("unusable fit window: {0}")]
    UnusableWindow(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
