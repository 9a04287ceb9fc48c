use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },

    #[error("need at least {min} observations, got {len}")]
    TooShort { len: usize, min: usize },

    #[error("observation times are not strictly increasing at index {index}")]
    NonMonotoneTimes { index: usize },

    #[error("non-finite entry at index {index}")]
    NonFiniteValue { index: usize },

    #[error("observation times have no spread; affine fit is undefined")]
    DegenerateTimeSpread,

    #[error("midpoint {midpoint} lies outside the open observation window ({start}, {end})")]
    MidpointOutOfRange { midpoint: f64, start: f64, end: f64 },

    #[error("measure selection is empty")]
    EmptySelection,

    #[error("invalid cluster count K={k} for n={n} points")]
    InvalidK { k: usize, n: usize },

    #[error("invalid neighbour count p={p} for n={n} points")]
    InvalidNeighbourCount { p: usize, n: usize },

    #[error("need at least {min} rows, got {n}")]
    TooFewRows { n: usize, min: usize },

    #[error("every feature column is constant")]
    AllColumnsConstant,

    #[error("point {index} has no similar neighbours (zero row sum)")]
    IsolatedPoint { index: usize },

    #[error("similarity matrix is malformed: {0}")]
    InvalidSimilarity(&'static str),

    #[error("eigensolver did not reach tolerance after {iterations} iterations")]
    EigenFailure { iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("trajectory {id}: {source}")]
    Trajectory {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_trajectory(self, id: &str) -> Error {
        Error::Trajectory {
            id: id.into(),
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stable machine-readable name of the innermost error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooShort { .. } => "TooShort",
            Error::NonMonotoneTimes { .. } => "NonMonotoneTimes",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::DegenerateTimeSpread => "DegenerateTimeSpread",
            Error::MidpointOutOfRange { .. } => "MidpointOutOfRange",
            Error::EmptySelection => "EmptySelection",
            Error::InvalidK { .. } => "InvalidK",
            Error::InvalidNeighbourCount { .. } => "InvalidNeighbourCount",
            Error::TooFewRows { .. } => "TooFewRows",
            Error::AllColumnsConstant => "AllColumnsConstant",
            Error::IsolatedPoint { .. } => "IsolatedPoint",
            Error::InvalidSimilarity(_) => "InvalidSimilarity",
            Error::EigenFailure { .. } => "EigenFailure",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Trajectory { source, .. } | Error::Stage { source, .. } => source.kind(),
        }
    }
}
