use thiserror::Error;

/// Crate-wide error type.
///
/// Construction errors (`InvalidPartition`, `InvalidExponent`, `InvalidDimension`)
/// come from validating constructors; the remaining variants are raised by the
/// numerical routines when an input leaves the domain where the finite
/// truncation is meaningful.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("not strictly decreasing: {0:?}")]
    InvalidPartition(Vec<i64>),

    #[error("not weakly decreasing: {0:?}")]
    InvalidExponent(Vec<i64>),

    #[error("point outside evaluation domain: {0}")]
    EvaluationDomain(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("sample grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("samples are not symmetric under coordinate permutation (deviation {0:.3e})")]
    SymmetryViolation(f64),

    #[error("matrix is not a truncated Toeplitz operator (residual {0:.3e})")]
    NotAToeplitzOperator(f64),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("iteration did not converge within {0} steps (last delta {1:.3e})")]
    SlowConvergence(usize, f64),

    #[error("no fundamental operator: defect equation residual {0:.3e}")]
    NoFundamentalOperator(f64),

    #[error("extension map ill defined: residual {0:.3e}")]
    ExtensionIllDefined(f64),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid tuple specification: {0}")]
    InvalidSpec(String),

    #[error("operator windows are incompatible: {0}")]
    IncompatibleWindows(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
