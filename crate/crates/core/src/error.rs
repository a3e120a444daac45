use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: negative timestamp {t}")]
    NegativeTimestamp { line: usize, t: f64 },

    #[error("line {line}: timestamp {t} precedes previous timestamp {prev} by more than the jitter tolerance")]
    OutOfOrder { line: usize, t: f64, prev: f64 },

    #[error("line {line}: event at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfSensor {
        line: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("invalid calibration: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scene projects entirely outside the sensor at t = 0")]
    SceneOffSensor,

    #[error("ray rotated onto or behind the principal plane (depth {depth:e})")]
    BehindCamera { depth: f64 },

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
