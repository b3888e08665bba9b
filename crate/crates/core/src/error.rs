use thiserror::Error;

/// Errors raised across the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidParams(String),

    #[error("N = {0} is even; the Gauss-sum factor eps_N and the Jacobi symbol (.|N) used by the spread carrier require odd N")]
    EvenDopplerBins(usize),

    #[error("{a} is not invertible modulo {n}: gcd({a}, {n}) = {gcd}")]
    NotCoprime { a: i64, n: i64, gcd: i64 },

    #[error("modulus {0} must be odd and positive")]
    EvenModulus(i64),

    #[error("index ({k}, {l}) outside the {m} x {n} grid")]
    IndexOutOfRange { k: i64, l: i64, m: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("region of interest covers the whole delay-Doppler domain; no bins left for noise estimation")]
    NoNoiseRegion,

    #[error("operation needs records from both hypotheses")]
    SingleHypothesis,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trial {trial} at {snr_db} dB: {source}")]
    Trial {
        trial: usize,
        snr_db: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
