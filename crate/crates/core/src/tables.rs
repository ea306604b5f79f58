//! Built-in parameter sweeps for the optimal-exit tables.
//!
//! Every sweep fixes `sigma^2 = 0.8` and works in units where `p0 = 1`, so
//! exit prices are reported as `L*/p0`. Unless swept: `rho = 0.03`,
//! `m = 0.08`, `K = 2`; rebasing rows use `r = 0.14`, reward-bearing rows
//! `g = 0.13`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exit_timing::{optimize_exit, ExitOptimum, SearchConfig};
use crate::market::ModelParams;

pub const TABLE_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];

const SIGMA_SQ: f64 = 0.8;
const RHO: f64 = 0.03;
const M: f64 = 0.08;
const K: f64 = 2.0;
const R: f64 = 0.14;
const G: f64 = 0.13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Rebasing,
    RewardBearing,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Rebasing => "rebasing",
            Setting::RewardBearing => "reward_bearing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub setting: Setting,
    /// Name of the swept parameter (`r`, `g`, `fee_cap_k`, `m` or `rho`).
    pub parameter: &'static str,
    pub value: f64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Fixed {
    r: f64,
    g: f64,
    m: f64,
    rho: f64,
    k: f64,
}

impl Fixed {
    fn base(setting: Setting) -> Self {
        match setting {
            Setting::Rebasing => Fixed {
                r: R,
                g: 0.0,
                m: M,
                rho: RHO,
                k: K,
            },
            Setting::RewardBearing => Fixed {
                r: 0.0,
                g: G,
                m: M,
                rho: RHO,
                k: K,
            },
        }
    }

    fn build(self, setting: Setting) -> Result<ModelParams> {
        match setting {
            Setting::Rebasing => ModelParams::rebasing(self.r, SIGMA_SQ, self.m, self.rho, self.k),
            Setting::RewardBearing => {
                ModelParams::reward_bearing(self.g, 1.0, SIGMA_SQ, self.m, self.rho, self.k)
            }
        }
    }
}

fn sweep(
    setting: Setting,
    parameter: &'static str,
    values: &[f64],
    set: impl Fn(&mut Fixed, f64),
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let mut fixed = Fixed::base(setting);
            set(&mut fixed, value);
            Ok(SweepPoint {
                setting,
                parameter,
                value,
                params: fixed.build(setting)?,
            })
        })
        .collect()
}

/// Parameter rows of built-in table `id` (1 to 6).
pub fn table_points(id: u8) -> Result<Vec<SweepPoint>> {
    use Setting::*;
    let k_values = [2.0, 3.0, 4.0, 5.0, 6.0];
    let rho_values = [0.010, 0.015, 0.020, 0.025, 0.030];
    let points = match id {
        1 => sweep(Rebasing, "r", &[0.12, 0.14, 0.16, 0.18, 0.20], |f, v| {
            f.r = v
        })?,
        2 => sweep(
            RewardBearing,
            "g",
            &[0.120, 0.125, 0.130, 0.135, 0.140],
            |f, v| f.g = v,
        )?,
        3 => {
            let mut pts = sweep(Rebasing, "fee_cap_k", &k_values, |f, v| f.k = v)?;
            pts.extend(sweep(RewardBearing, "fee_cap_k", &k_values, |f, v| {
                f.k = v
            })?);
            pts
        }
        4 => sweep(Rebasing, "m", &[0.06, 0.07, 0.08, 0.09, 0.10], |f, v| {
            f.m = v
        })?,
        5 => sweep(
            RewardBearing,
            "m",
            &[0.070, 0.075, 0.080, 0.085, 0.090],
            |f, v| f.m = v,
        )?,
        6 => {
            let mut pts = sweep(Rebasing, "rho", &rho_values, |f, v| f.rho = v)?;
            pts.extend(sweep(RewardBearing, "rho", &rho_values, |f, v| f.rho = v)?);
            pts
        }
        other => {
            return Err(Error::Domain(format!(
                "unknown table {other}; expected one of 1-6"
            )))
        }
    };
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub point: SweepPoint,
    pub no_fee: ExitOptimum,
    pub with_fee: ExitOptimum,
}

/// Optimizes both regimes for every row of table `id`.
pub fn reproduce_table(id: u8, search: &SearchConfig) -> Result<Vec<TableRow>> {
    table_points(id)?
        .into_iter()
        .map(|point| {
            Ok(TableRow {
                point,
                no_fee: optimize_exit(&point.params, false, search)?,
                with_fee: optimize_exit(&point.params, true, search)?,
            })
        })
        .collect()
}
