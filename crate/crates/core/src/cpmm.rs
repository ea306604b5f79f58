//! Constant-product pool valuation.
//!
//! With reserves satisfying `u * v = L` and an external price `P` (ETH per
//! LST), arbitrage drives the pool to the reserves minimizing `P u + v` on the
//! curve. The minimizer is `u = sqrt(L/P)`, `v = sqrt(P L)`, worth
//! `2 sqrt(P L)` ETH.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance for the deposit-ratio check.
pub const PROVISION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolReserves {
    x_reserve: f64,
    y_reserve: f64,
    invariant_l: f64,
}

impl PoolReserves {
    pub fn new(x_reserve: f64, y_reserve: f64) -> Result<Self> {
        if !(x_reserve > 0.0 && y_reserve > 0.0) || !x_reserve.is_finite() || !y_reserve.is_finite()
        {
            return Err(Error::Domain(format!(
                "pool reserves must be positive and finite, got ({x_reserve}, {y_reserve})"
            )));
        }
        Ok(PoolReserves {
            x_reserve,
            y_reserve,
            invariant_l: x_reserve * y_reserve,
        })
    }

    pub fn x_reserve(&self) -> f64 {
        self.x_reserve
    }
    pub fn y_reserve(&self) -> f64 {
        self.y_reserve
    }
    pub fn invariant_l(&self) -> f64 {
        self.invariant_l
    }
}

/// An investor's deposit into a pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpPosition {
    pub lst_deposit: f64,
    pub eth_deposit: f64,
    pub share_lambda: f64,
}

/// Pool state after arbitrageurs align the marginal rate with the price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rebalanced {
    pub u_star: f64,
    pub v_star: f64,
    pub pool_value: f64,
}

pub fn rebalance_pool(invariant_l: f64, realized_price: f64) -> Result<Rebalanced> {
    if !(invariant_l > 0.0 && invariant_l.is_finite()) {
        return Err(Error::Domain(format!(
            "invariant must be positive, got {invariant_l}"
        )));
    }
    check_price(realized_price)?;
    Ok(Rebalanced {
        u_star: (invariant_l / realized_price).sqrt(),
        v_star: (realized_price * invariant_l).sqrt(),
        pool_value: 2.0 * (invariant_l * realized_price).sqrt(),
    })
}

fn check_price(price: f64) -> Result<()> {
    if price > 0.0 && price.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "price must be positive, got {price}"
        )))
    }
}

/// ETH value of a rebalanced position that deposited `lst_deposit` LST and
/// `eth_deposit` ETH: `2 sqrt(x y P)`.
pub fn position_value(lst_deposit: f64, eth_deposit: f64, realized_price: f64) -> Result<f64> {
    if !(lst_deposit >= 0.0 && eth_deposit >= 0.0) {
        return Err(Error::Domain(format!(
            "deposits must be non-negative, got ({lst_deposit}, {eth_deposit})"
        )));
    }
    check_price(realized_price)?;
    Ok(2.0 * (lst_deposit * eth_deposit * realized_price).sqrt())
}

/// Deposit needed to own a fraction `share_lambda` of `pool`.
pub fn provision_for_share(pool: &PoolReserves, share_lambda: f64) -> Result<LpPosition> {
    if !(share_lambda > 0.0 && share_lambda < 1.0) {
        return Err(Error::Domain(format!(
            "pool share must lie in (0, 1), got {share_lambda}"
        )));
    }
    Ok(LpPosition {
        lst_deposit: share_lambda * pool.x_reserve,
        eth_deposit: share_lambda * pool.y_reserve,
        share_lambda,
    })
}

/// Whether a deposit leaves the pool's marginal rate at `p0`, i.e.
/// `eth / lst = p0` to [`PROVISION_RTOL`].
pub fn check_provision_condition(lst_deposit: f64, eth_deposit: f64, p0: f64) -> Result<bool> {
    if !(lst_deposit > 0.0) {
        return Err(Error::Domain(format!(
            "LST deposit must be positive, got {lst_deposit}"
        )));
    }
    let ratio = eth_deposit / lst_deposit;
    Ok((ratio - p0).abs() <= PROVISION_RTOL * p0.abs())
}
