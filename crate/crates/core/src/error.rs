use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),

    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("time {t} outside the admissible window [{lo}, {hi})")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("time ordering violated: need s <= t, got s = {s}, t = {t}")]
    TimeOrder { s: f64, t: f64 },

    #[error("mixture weights must be positive and sum to 1 (sum = {0})")]
    MixtureWeights(f64),

    #[error("mixture clock {mixture_tau} does not match C = {c}")]
    ClockMismatch { mixture_tau: f64, c: f64 },

    #[error("flow step rejected: {0}")]
    StepRejected(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("breather hypothesis rejected: {0}")]
    Breather(String),

    #[error("trajectory is too short: {0}")]
    Trajectory(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
