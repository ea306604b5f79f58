//! Allocation and exit-timing analysis for an investor splitting ETH between
//! holding, liquid staking and liquidity provision in a constant-product
//! LST/ETH pool.
//!
//! * [`market`]: parameters, standing assumptions, price moments.
//! * [`cpmm`]: pool rebalancing and position value.
//! * [`allocation`]: the time-0 split and the minimal fee schedule.
//! * [`exit_timing`]: closed-form payoffs of fixed exit levels and the
//!   optimal level.
//! * [`mc`]: Monte Carlo counterparts of the closed forms.
//! * [`tables`]: built-in parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod cpmm;
pub mod error;
pub mod exit_timing;
pub mod market;
pub mod mc;
pub mod search;
pub mod tables;

pub use error::{Error, Result};
pub use market::{ModelParams, ParamSpec, TokenKind};
