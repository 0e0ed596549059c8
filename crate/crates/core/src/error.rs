use thiserror::Error;

/// Domain errors for the closed-form models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("number of vehicles must be at least 1")]
    ZeroVehicles,
    #[error("frame length must be at least 1")]
    ZeroFrameLength,
    #[error("capture probability {0} is outside [0, 1]")]
    InvalidRho(f64),
    #[error("empty vehicle range {min}..={max}")]
    EmptyRange { min: u32, max: u32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("SIR threshold must be positive, got {0} dB")]
    InvalidGamma(f64),
    #[error("shadowing sigma must be non-negative, got {0} dB")]
    InvalidShadowing(f64),
    #[error("unknown capture model `{0}`")]
    UnknownModel(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("registration number is empty")]
    Empty,
    #[error("registration number `{vrn}` is longer than {max} characters")]
    TooLong { vrn: String, max: usize },
    #[error("illegal character {ch:?} in registration number (allowed: A-Z, 0-9)")]
    IllegalChar { ch: char },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame is empty")]
    Empty,
    #[error("unknown frame kind tag 0x{0:02x}")]
    UnknownKind(u8),
    #[error("frame truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("{0} trailing bytes after frame body")]
    Trailing(usize),
    #[error("bitmap marks slot {slot} but frame length is {frame_length}")]
    BitmapOutOfRange { slot: usize, frame_length: u16 },
    #[error("data frame carries invalid registration number: {0}")]
    BadVrn(#[from] EncodingError),
    #[error("data frame integer {carried} does not match its registration number ({expected})")]
    IdentityMismatch { carried: u64, expected: u64 },
    #[error("frame body too large to encode: {0}")]
    TooLarge(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown protocol `{0}` (known: {1})")]
    Unknown(String, String),
    #[error("slot map index {index} is not below frame length {frame_length}")]
    SlotOutOfRange { index: u16, frame_length: u16 },
    #[error("slot map is not strictly increasing")]
    NotIncreasing,
    #[error("expected {expected} slot outcomes, got {got}")]
    OutcomeCount { expected: usize, got: usize },
}

/// Aggregates that cannot be formed from the available data.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no data: {0}")]
    NoData(&'static str),
    #[error("unsupported confidence level {0}")]
    UnsupportedLevel(u32),
}

/// Scenario file or sweep problems. Every variant names the offending key.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: invalid value `{value}` ({reason})")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("key `{0}` given more than once")]
    Duplicate(String),
    #[error("sweep over `{0}` has no values")]
    EmptySweep(String),
    #[error("campaign grid is empty")]
    EmptyGrid,
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}
