use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("satellite position lies within 1 m of the ground station")]
    DegeneratePosition,

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("satellite below the horizon at t = {t} s")]
    BelowHorizon { t: f64 },

    #[error("time {t} s outside the trajectory span [{start}, {end}] s")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("zero signal power, SNR cannot be calibrated")]
    ZeroSignalPower,

    #[error("ABC accepted {accepted} candidates but {needed} were requested")]
    InsufficientSamples { accepted: usize, needed: usize },

    #[error("Hessian is singular (condition number {condition:e})")]
    SingularHessian { condition: f64 },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("sample covariance is rank deficient ({snapshots} snapshot(s))")]
    RankDeficient { snapshots: usize },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than by the estimation itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Scenario(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
