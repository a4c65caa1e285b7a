//! Failure classes mapped onto process exit codes.

use std::fmt;
use std::process::ExitCode;

use holeburn::Error;

/// Input rejected before or during validation (exit 2).
#[derive(Debug)]
pub struct Invalid(pub String);

/// Computation failed on valid input (exit 3).
#[derive(Debug)]
pub struct Numeric(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Numeric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}
impl std::error::Error for Numeric {}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

fn core_code(e: &Error) -> u8 {
    match e {
        Error::NonFiniteState { .. } | Error::NoFeatureFound { .. } | Error::DegenerateFit(_) => {
            EXIT_NUMERIC
        }
        Error::Io(_) => 1,
        _ => EXIT_VALIDATION,
    }
}

pub fn exit_code(err: &anyhow::Error) -> ExitCode {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return ExitCode::from(EXIT_VALIDATION);
        }
        if cause.is::<Numeric>() {
            return ExitCode::from(EXIT_NUMERIC);
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return ExitCode::from(core_code(e));
        }
    }
    ExitCode::FAILURE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        let e: anyhow::Error = Error::InsufficientData("x".into()).into();
        assert_eq!(exit_code(&e), ExitCode::from(2));
        let e: anyhow::Error = Error::DegenerateFit("x".into()).into();
        assert_eq!(exit_code(&e), ExitCode::from(3));
        let e = anyhow::Error::new(Invalid("x".into())).context("while loading");
        assert_eq!(exit_code(&e), ExitCode::from(2));
    }
}
