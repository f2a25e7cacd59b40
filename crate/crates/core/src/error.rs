use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid converter parameters: {0}")]
    InvalidParams(String),

    #[error("invalid degradation state: {0}")]
    InvalidDegradation(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// Inductor current reached zero while the switch was open.
    #[error("discontinuous conduction: inductor current reached zero at t = {time_s:.3e} s")]
    DiscontinuousConduction { time_s: f64 },

    #[error(
        "no periodic steady state after {periods} period evaluations (residual {residual:.3e})"
    )]
    NoConvergence { periods: usize, residual: f64 },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("insufficient resolution: {on} samples in T_on, {off} in T_off (need at least {min})")]
    InsufficientResolution { on: usize, off: usize, min: usize },

    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("no load: mean inductor current {0:.3e} A")]
    NoLoad(f64),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("batch failed for frames {indices:?}: {first}")]
    Batch { indices: Vec<usize>, first: String },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("no health baseline established")]
    NotCalibrated,

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
