use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {what} (expected {expected}, got {actual})")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("symbol magnitude {magnitude:e} at row {row}, column {col} is too small to divide by")]
    SingularSymbol { row: usize, col: usize, magnitude: f64 },

    #[error("invalid target {index}: {reason}")]
    Target { index: usize, reason: String },

    #[error("Doppler processing requires multiple symbols")]
    SingleSymbol,

    #[error("CFAR window does not fit: {cells} cells need at least {needed}")]
    CfarWindow { cells: usize, needed: usize },

    #[error("{0}")]
    Measurement(String),

    #[error(transparent)]
    Iq(#[from] crate::iq::IqError),

    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
