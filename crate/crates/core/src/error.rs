use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdpError {
    #[error("invalid alphabet size {k}: need k >= 2")]
    InvalidAlphabet { k: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid privacy parameter epsilon = {0}: need 0 < epsilon <= 50")]
    PrivacyParameter(f64),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Fisher information is singular: output {output} has zero probability but nonzero score")]
    SingularInformation { output: usize },

    #[error("empty batch: at least one sample is required")]
    EmptyBatch,

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, LdpError>;
