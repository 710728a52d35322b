use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero: v_{n} = 0")]
    ZeroDivision { n: i64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("negative input at index {n}")]
    NegativeInput { n: i64 },
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("pole encountered at k = {k}, z = {z}")]
    PoleEncountered { k: i64, z: String },
    #[error("no convergence after {steps} steps (achieved {achieved:e})")]
    NoConvergence { steps: usize, achieved: f64 },
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("singular coefficient: {0}")]
    SingularCoefficient(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("singularity detected near t = {t}")]
    SingularityDetected { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("not available: {0}")]
    NotAvailable(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParams(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
