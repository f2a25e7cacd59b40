use std::fmt;

use boost_esr::Error;

pub const SUCCESS: u8 = 0;
pub const CONFIG_ERROR: u8 = 2;
pub const ESTIMATION_ERROR: u8 = 3;
pub const PARTIAL_FAILURE: u8 = 4;

/// Some sweep points or monitor inputs failed; the rest of the output was written.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFailure {
    pub failed: usize,
    pub total: usize,
    pub first: String,
}

impl fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} of {} items failed; first: {}",
            self.failed, self.total, self.first
        )
    }
}

impl std::error::Error for PartialFailure {}

/// Process exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<PartialFailure>() {
            return PARTIAL_FAILURE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidParams(_)
                | Error::InvalidDegradation(_)
                | Error::InvalidConfig(_)
                | Error::InvalidFrame(_)
                | Error::Parse { .. }
                | Error::MissingColumn(_)
                | Error::MalformedFrame(_)
                | Error::InvalidThresholds(_)
                | Error::Io(_)
                | Error::Json(_) => CONFIG_ERROR,
                _ => ESTIMATION_ERROR,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return CONFIG_ERROR;
        }
    }
    CONFIG_ERROR
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes() {
        let e = anyhow::Error::new(Error::NoLoad(0.0)).context("estimating frame.csv");
        assert_eq!(exit_code(&e), ESTIMATION_ERROR);
        let e = anyhow::Error::new(Error::MissingColumn("v_c_v".into()));
        assert_eq!(exit_code(&e), CONFIG_ERROR);
        let e = anyhow::Error::new(PartialFailure {
            failed: 1,
            total: 5,
            first: "x".into(),
        });
        assert_eq!(exit_code(&e), PARTIAL_FAILURE);
    }
}
