use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tree arity must be at least 1, got {0}")]
    InvalidArity(usize),
    #[error("function is not Morse: critical point at {at:.6} has |f''| = {second:.3e}")]
    NonMorse { at: f64, second: f64 },
    #[error("configuration is not generic: {0}")]
    NonGeneric(String),
    #[error("invalid input at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("small spectrum has dimension {found}, expected {expected} (hbar = {hbar})")]
    DimensionMismatch { expected: usize, found: usize, hbar: f64 },
    #[error("Green operator is ill-conditioned: smallest retained eigenvalue {smallest:.3e} vs tolerance {tol:.3e}")]
    IllConditioned { smallest: f64, tol: f64 },
    #[error("homotopy identity residual {0:.3e} exceeds 1e-6")]
    HomotopyResidual(f64),
    #[error("outside the validated regime: {0}")]
    Regime(String),
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("fit design matrix condition number {0:.3e} exceeds 1e6")]
    FitIllConditioned(f64),
    #[error("transport residual {0:.3e} exceeds 1e-6")]
    TransportResidual(f64),
    #[error("phase does not have a nondegenerate minimum at the origin: {0}")]
    NotAMinimum(String),
    #[error("degenerate fiber Hessian {0:.3e}")]
    DegenerateHessian(f64),
    #[error("samples too coarse: {0}")]
    Refine(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
