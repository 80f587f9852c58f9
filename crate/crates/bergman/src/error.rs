use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the open unit disk: |z| = {0}")]
    OutsideDisk(f64),
    #[error("radii schedule: {0}")]
    Schedule(String),
    #[error("numerical guard tripped: {0}")]
    Guard(String),
    #[error("kernel truncation tail too large: bound {bound:e} exceeds rel tol {tol:e}")]
    KernelTail { bound: f64, tol: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// CLI exit code: 2 for validation problems, 3 for numerical guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Guard(_) | Error::KernelTail { .. } | Error::Eigen(_) => 3,
            _ => 2,
        }
    }
}
