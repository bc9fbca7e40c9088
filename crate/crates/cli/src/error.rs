use std::fmt;

use interdesign::Error;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_GUARANTEE: i32 = 4;
pub const EXIT_RANK_DEFICIENT: i32 = 5;
pub const EXIT_VERIFY: i32 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self::new(EXIT_OTHER, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInstance(_)
            | Error::NegativeWeight { .. }
            | Error::ZeroSum
            | Error::WeightSumError { .. }
            | Error::DegreeMismatch { .. }
            | Error::TooLarge { .. } => EXIT_PARSE,
            Error::Infeasible => EXIT_INFEASIBLE,
            Error::GuaranteeViolated { .. } => EXIT_GUARANTEE,
            Error::RankDeficient { .. } | Error::SingularMatrix { .. } => EXIT_RANK_DEFICIENT,
            _ => EXIT_OTHER,
        };
        Self::new(code, e.to_string())
    }
}
