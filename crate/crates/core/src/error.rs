use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown modulation `{0}`")]
    UnknownModulation(String),

    #[error("label set too large: {count} labels exceeds the limit of {limit}")]
    TooManyLabels { count: u128, limit: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subspace training requires a constellation closed under negation")]
    SubspaceUnsupported,

    #[error("empty representative set")]
    EmptyRepresentatives,

    #[error("subset contains duplicate labels")]
    DuplicateLabels,

    #[error("search space of {count} subsets exceeds the cap of {cap}")]
    SearchTooLarge { count: u128, cap: u128 },

    #[error("singular receive covariance")]
    SingularCovariance,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
