use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("bit-string has length {got}, instance expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// A statistic is undefined because one of its inputs has no spread.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("probe step crosses the Chebychev kink; shrink the step")]
    KinkCrossed,

    #[error("final angle is undefined at the origin")]
    UndefinedAngle,

    #[error("point ({z1}, {z2}) does not strictly dominate the reference point")]
    NotAboveReference { z1: f64, z2: f64 },

    #[error("non-positive coordinate in epsilon indicator input: ({z1}, {z2})")]
    NonPositive { z1: f64, z2: f64 },

    #[error("best-known point has zero Chebychev value")]
    ZeroBest,

    #[error("empty sample")]
    EmptySample,

    #[error("missing results cell: {0}")]
    MissingCell(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlRead(#[from] toml::de::Error),

    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
