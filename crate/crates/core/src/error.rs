use thiserror::Error;

/// Errors raised by code construction, modulation, decoding and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code dimensions: n = {n}, k = {k}")]
    InvalidDimensions { n: usize, k: usize },

    #[error("CRC polynomial has degree {degree}, expected n - k = {expected}")]
    PolynomialDegree { degree: usize, expected: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unsupported bits per symbol: {0}")]
    UnsupportedModulation(usize),

    #[error("neighbour count {mu} out of range 1..={max}")]
    NeighbourCount { mu: usize, max: usize },

    #[error("invalid channel parameter: {0}")]
    Channel(String),

    #[error("reliability at index {index} is not a finite non-negative number")]
    InvalidReliability { index: usize },

    #[error("weight model needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("codebook too large for exhaustive search: k = {0}")]
    CodebookTooLarge(usize),

    #[error("schedule too large: {0}")]
    ScheduleTooLarge(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
