use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} samples, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("input contains NaN or infinite values")]
    NonFiniteInput,
    #[error("step size {tau} is not below 2/||grad||^2 = {limit}")]
    StepTooLarge { tau: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dual field violates the unit-ball constraint (max norm {max_norm})")]
    InfeasibleDual { max_norm: f64 },
    #[error("opening of radius {rho} is empty")]
    EmptyOpening { rho: f64 },
    #[error("no sign change of the Cheeger function on the search interval")]
    NotBracketed,
    #[error("lambda {lambda} is not below the admissible limit {limit}")]
    LambdaTooLarge { lambda: f64, limit: f64 },
    #[error("no admissible alpha: |z| >= 1 on the validation grid down to alpha = {alpha}")]
    AlphaTooLarge { alpha: f64 },
    #[error("contour set is empty")]
    EmptyContour,
    #[error("radius {r} is below three grid spacings")]
    RadiusTooSmall { r: f64 },
    #[error("shape has no analytic certificate")]
    NoOracle,
    #[error("operation requires a convex shape")]
    NotConvex,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape spec line {line}: {message}")]
    Parse { line: usize, message: String },
}
