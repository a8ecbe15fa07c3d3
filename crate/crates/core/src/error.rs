use alloc::string::String;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("{0} positivity violated (min eigenvalue {1:e})")]
    NotPositive(&'static str, f64),
    #[error("trace preservation violated (max deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("{0} not normalized (deviation {1:e})")]
    NotNormalized(&'static str, f64),
    #[error("state is not pure (purity {0})")]
    NotPure(f64),
    #[error("measurement is incomplete (max deviation from identity {0:e})")]
    IncompleteMeasurement(f64),
    #[error("ill-conditioned basis (condition number {0:e})")]
    IllConditioned(f64),
    #[error("operator is PPT (min partial-transpose eigenvalue {0:e}); no decomposable witness detects it")]
    PptInput(f64),
    #[error("witness value has imaginary part {0:e}")]
    ComplexValue(f64),
    #[error("singular linear system")]
    Singular,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::DimensionMismatch(alloc::format!($($arg)*))
    };
}
pub(crate) use dim_err;
