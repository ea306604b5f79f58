use std::fmt;

use thiserror::Error;

use crate::market::ExitAssumption;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("exit-timing assumptions violated: {}", AssumptionList(.0))]
    Assumption(Vec<ExitAssumption>),

    #[error(
        "staking incentive fails: r + g - rho - m = {margin:.6} must exceed ln p0 = {ln_p0:.6} with ln p0 >= 0"
    )]
    NoStakingIncentive { margin: f64, ln_p0: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

struct AssumptionList<'a>(&'a [ExitAssumption]);

impl fmt::Display for AssumptionList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a.id())?;
        }
        Ok(())
    }
}
