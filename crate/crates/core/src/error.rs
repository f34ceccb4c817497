use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("signal {0} outside [0, 1]")]
    SignalOutOfRange(f64),

    #[error("non-finite payoff for player {player} at joint action {joint}")]
    NonFinitePayoff { player: usize, joint: usize },

    #[error("{what} too large for exhaustive enumeration: {size} exceeds limit {limit}")]
    TooLarge { what: &'static str, size: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("resistance graph is not strongly connected")]
    Disconnected,

    #[error("no transitions observed at epsilon = {epsilon} after {samples} samples")]
    UnderSampled { epsilon: f64, samples: u64 },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
