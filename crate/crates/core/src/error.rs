use thiserror::Error;

use crate::tle::TleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("observation is incompatible with the prior (zero normalising constant)")]
    Incompatible,
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("re-entry at t = {epoch} s (|p| = {radius} m)")]
    Reentry { epoch: f64, radius: f64 },
    #[error("object outside the sensor field of view at t = {0} s")]
    OutOfFov(f64),
    #[error("admissible region infeasible: {accepted} accepted out of {drawn} draws")]
    Infeasible { accepted: usize, drawn: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{run}: t = {epoch} s ({event}): {source}")]
    Step {
        run: String,
        epoch: f64,
        event: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Tle(#[from] TleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}
