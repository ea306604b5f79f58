//! Time-0 split of one ETH between holding, staking and liquidity provision.
//!
//! The investor keeps `a` ETH unstaked, supplies `x` LST and `y = p0 x` ETH
//! to the pool and stakes the rest. For a planned horizon `t` the expected
//! discounted wealth is linear in `(a, x)`:
//!
//! ```text
//! {fee - e^{-rho t} Q(t)} x - e^{-rho t}(e^{(r+g-m)t} - 1) a + e^{-rho t} e^{(r+g-m)t}
//! ```
//!
//! with `Q(t) = E[(sqrt(D_t P_t) - sqrt(p0))^2]` and `fee` the cumulative
//! discounted fee per LST supplied. Providing liquidity pays off exactly when
//! `fee > Phi(t)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{
    expected_discounted_price, require_staking_incentive, squared_deviation, ModelParams,
};

const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllocationDecision {
    pub a_hold: f64,
    pub x_lp_lst: f64,
    pub y_lp_eth: f64,
}

impl AllocationDecision {
    /// Checked constructor; `y` is implied by the provision condition.
    pub fn new(a_hold: f64, x_lp_lst: f64, p0: f64) -> Result<Self> {
        let supplied = p0 * x_lp_lst;
        let ok = x_lp_lst >= 0.0
            && supplied <= 0.5 + FEASIBILITY_SLACK
            && supplied <= a_hold + FEASIBILITY_SLACK
            && a_hold <= 1.0 - supplied + FEASIBILITY_SLACK;
        if !ok || !a_hold.is_finite() || !x_lp_lst.is_finite() {
            return Err(Error::Domain(format!(
                "infeasible allocation a = {a_hold}, x = {x_lp_lst} at p0 = {p0}: \
                 need 0 <= p0 x <= a <= 1 - p0 x"
            )));
        }
        Ok(AllocationDecision {
            a_hold,
            x_lp_lst,
            y_lp_eth: supplied,
        })
    }

    /// Stake everything.
    pub fn inaction() -> Self {
        AllocationDecision {
            a_hold: 0.0,
            x_lp_lst: 0.0,
            y_lp_eth: 0.0,
        }
    }

    /// Stake half, pair the other half with LST in the pool.
    pub fn equal_risk(p0: f64) -> Self {
        AllocationDecision {
            a_hold: 0.5,
            x_lp_lst: 1.0 / (2.0 * p0),
            y_lp_eth: 0.5,
        }
    }

    pub fn provides_liquidity(&self) -> bool {
        self.x_lp_lst > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeeEvaluation {
    pub horizon_t: f64,
    pub phi_threshold: f64,
    pub cumulative_fee: f64,
    pub capped: bool,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "time must be finite and >= 0, got {t}"
        )))
    }
}

fn sqrt_rate(p: &ModelParams) -> f64 {
    p.g() / 2.0 - p.sigma_sq() / 8.0 - p.m() / 2.0 - p.rho()
}

/// Minimal cumulative discounted fee making liquidity provision weakly
/// better than staking everything:
/// `p0 [e^{(g-m-rho)t}(e^{rt} + 1) - 2 e^{(g/2 - sigma^2/8 - m/2 - rho)t}]`.
pub fn fee_threshold_phi(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let base = p.g() - p.m() - p.rho();
    Ok(p.p0() * ((base * t).exp() * ((p.r() * t).exp() + 1.0) - 2.0 * (sqrt_rate(p) * t).exp()))
}

/// Fee rate `phi_t` whose discounted integral `int_0^t phi_s e^{-rho s} ds`
/// reproduces [`fee_threshold_phi`] exactly, i.e. `phi_t = e^{rho t} Phi'(t)`.
pub fn minimal_fee_rate(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let base = p.g() - p.m() - p.rho();
    let grown = base + p.r();
    let k = sqrt_rate(p);
    let derivative = base * (base * t).exp() + grown * (grown * t).exp() - 2.0 * k * (k * t).exp();
    Ok(p.p0() * (p.rho() * t).exp() * derivative)
}

/// Cumulative discounted fee under the minimal schedule, capped at
/// `2 p0 K`.
pub fn cumulative_discounted_fee(p: &ModelParams, t: f64) -> Result<FeeEvaluation> {
    let phi = fee_threshold_phi(p, t)?;
    let cap = 2.0 * p.p0() * p.fee_cap_k();
    Ok(FeeEvaluation {
        horizon_t: t,
        phi_threshold: phi,
        cumulative_fee: phi.min(cap),
        capped: phi > cap,
    })
}

/// Expected discounted wealth of `decision` held to horizon `t`.
pub fn allocation_objective(
    decision: &AllocationDecision,
    p: &ModelParams,
    t: f64,
    cumulative_fee: f64,
) -> Result<f64> {
    let checked = AllocationDecision::new(decision.a_hold, decision.x_lp_lst, p.p0())?;
    if (checked.y_lp_eth - decision.y_lp_eth).abs() > FEASIBILITY_SLACK {
        return Err(Error::Domain(format!(
            "y = {} breaks the provision condition y = p0 x = {}",
            decision.y_lp_eth, checked.y_lp_eth
        )));
    }
    let discount = (-p.rho() * t).exp();
    let growth = expected_discounted_price(p, t)? * (p.r() * t).exp() / p.p0();
    let q = squared_deviation(p, t)?;
    Ok((cumulative_fee - discount * q) * decision.x_lp_lst
        - discount * (growth - 1.0) * decision.a_hold
        + discount * growth)
}

/// Optimal decision for horizon `t` given the cumulative discounted fee.
///
/// Liquidity is provided only on a strict improvement, `fee > Phi(t)`; ties
/// resolve to staking everything.
pub fn optimal_allocation(
    p: &ModelParams,
    t: f64,
    cumulative_fee: f64,
) -> Result<AllocationDecision> {
    require_staking_incentive(p)?;
    let phi = fee_threshold_phi(p, t)?;
    if cumulative_fee > phi {
        Ok(AllocationDecision::equal_risk(p.p0()))
    } else {
        Ok(AllocationDecision::inaction())
    }
}
