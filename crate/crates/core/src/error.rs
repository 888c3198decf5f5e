use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),
    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NonPositiveDefinite { column: usize, pivot: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("VAR model is not stable (spectral radius {0:.6})")]
    UnstableModel(f64),
    #[error("non-positive variance {value} at r = {r}")]
    NonPositiveVariance { r: f64, value: f64 },
    #[error("invalid window (r = {r}, q = {q}): need 0 < r - q/2 < r + q/2 < 1")]
    InvalidWindow { r: f64, q: f64 },
    #[error("window indices {lo}..={hi} fall outside the available sample 1..={t}")]
    WindowOutOfRange { lo: i64, hi: i64, t: usize },
    #[error("singular OLS design matrix")]
    SingularDesign,
    #[error("singular weighted (ALS) design matrix")]
    SingularWeightedDesign,
    #[error("sample too short: {0}")]
    TooShort(String),
    #[error("bandwidth {b} outside admissible range [{lo}, {hi}]")]
    BandwidthOutOfRange { b: f64, lo: f64, hi: f64 },
    #[error("infeasible bandwidth: {0}")]
    BandwidthInfeasible(String),
    #[error("empty bandwidth grid")]
    EmptyGrid,
    #[error("the matrix inside Xi is singular (degenerate Cholesky factor)")]
    SingularXi,
    #[error("empty Monte Carlo study")]
    EmptyStudy,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 = parse / input errors, 3 = numerical failures, 4 = infeasible configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) | Error::TooShort(_) => 2,
            Error::InvalidWindow { .. }
            | Error::WindowOutOfRange { .. }
            | Error::BandwidthOutOfRange { .. }
            | Error::BandwidthInfeasible(_)
            | Error::EmptyGrid
            | Error::Config(_)
            | Error::ShapeMismatch(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
