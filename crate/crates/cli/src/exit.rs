//! Process exit codes.

use std::fmt;

use lfdecouple::Error;

pub const OK: i32 = 0;
/// A verification check failed, or an I/O problem.
pub const FAILURE: i32 = 1;
pub const DETECTION: i32 = 2;
pub const ANCHOR: i32 = 3;
pub const NOT_RATIONAL: i32 = 4;
pub const SHAPE: i32 = 5;
pub const POLE: i32 = 6;
pub const USAGE: i32 = 64;

/// Invalid flags or flag combinations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

pub fn code_for_error(error: &Error) -> i32 {
    match error {
        Error::BudgetTooSmall { .. } => DETECTION,
        Error::AnchorSingular { .. } | Error::ZeroWeight { .. } => ANCHOR,
        Error::NotRational { .. } => NOT_RATIONAL,
        Error::Shape(_)
        | Error::DimensionCap { .. }
        | Error::DuplicateNodes { .. }
        | Error::NodeCollision { .. }
        | Error::DegreeMismatch { .. } => SHAPE,
        Error::PoleHit { .. }
        | Error::DenominatorVanishes { .. }
        | Error::EvalPole { .. }
        | Error::LogOfZero { .. }
        | Error::NonFinite(_) => POLE,
        Error::Syntax { .. } | Error::UnknownVariable(_) => USAGE,
    }
}

/// Exit code for an error returned by a command.
pub fn code_for(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return code_for_error(e);
        }
        if cause.downcast_ref::<UsageError>().is_some() {
            return USAGE;
        }
    }
    FAILURE
}
