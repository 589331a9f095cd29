use thiserror::Error;

use crate::builder::ConsistencyViolation;
use crate::parser::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("{field} value {value} out of range (must be < {limit})")]
    Field { field: &'static str, value: u64, limit: u64 },
    #[error("timestamp overflows the microsecond clock")]
    Overflow,
    #[error("timestamp {0} us exceeds the 9999h trace format ceiling")]
    Unformattable(u64),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("failed to read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Line(ParseDiagnostic),
    #[error("trace contains no events")]
    EmptyTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("cannot replay an empty event log")]
    EmptyLog,
    #[error("event log is not sorted by timestamp")]
    Unsorted,
    #[error("inconsistent trace: {0}")]
    Inconsistent(ConsistencyViolation),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no samples")]
    EmptySample,
    #[error("sample value {0} is outside the distribution's support")]
    NonPositiveSample(u64),
    #[error("histogram needs at least one bin")]
    ZeroBins,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("analysis range is empty")]
    EmptyWindow,
    #[error("slot width must be at least 1 us")]
    ZeroSlotWidth,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("run {run}: {message}")]
    InvalidRun { run: usize, message: String },
    #[error(transparent)]
    Range(#[from] RangeError),
}
