//! Expected payoff of leaving the pool at a fixed price level.
//!
//! Exiting when the LST price first reaches `L = p0 e^{sigma c}` is the
//! first time the Brownian motion `B_t` meets the line `c + d t`, with
//! `d = sigma/2 - g/sigma`. Every payoff component is a sum of
//! `E[e^{-lam T}]`-type transforms of that hitting time, multiplied by
//! powers of `L/p0`, so the expected payoff is available in closed form.
//! `c < 0` is a stop-loss (price floor), `c > 0` a stop-win (price
//! ceiling). The threshold `c = 0` (exit immediately) is excluded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{require_exit_assumptions, ExitAssumption, ModelParams};
use crate::search::{golden_section_max, log_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `c > 0`: stop once `P >= L`.
    Up,
    /// `c < 0`: stop once `P <= L`.
    Down,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingThreshold {
    c: f64,
    d: f64,
    l_over_p0: f64,
    direction: Direction,
}

impl StoppingThreshold {
    /// Threshold from the scaled log level `c`.
    pub fn new(c: f64, p: &ModelParams) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!(
                "scaled threshold must be finite and non-zero, got {c}"
            )));
        }
        Ok(StoppingThreshold {
            c,
            d: p.derived().d,
            l_over_p0: (p.sigma() * c).exp(),
            direction: if c > 0.0 {
                Direction::Up
            } else {
                Direction::Down
            },
        })
    }

    /// Threshold from the exit price expressed as a multiple of `p0`.
    pub fn from_price_ratio(l_over_p0: f64, p: &ModelParams) -> Result<Self> {
        if !(l_over_p0 > 0.0) || l_over_p0 == 1.0 || !l_over_p0.is_finite() {
            return Err(Error::Domain(format!(
                "exit price ratio must be positive and differ from 1, got {l_over_p0}"
            )));
        }
        let mut t = Self::new(l_over_p0.ln() / p.sigma(), p)?;
        t.l_over_p0 = l_over_p0;
        Ok(t)
    }

    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn l_over_p0(&self) -> f64 {
        self.l_over_p0
    }
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// `exp(shift c - c (d ± sqrt(d^2 + 2 lam)))`: the transform
    /// `E[e^{-lam T}]` times `(L/p0)^{shift/sigma}`.
    fn tilted(&self, shift: f64, lam: f64) -> std::result::Result<f64, f64> {
        let radicand = self.d * self.d + 2.0 * lam;
        if radicand < 0.0 {
            return Err(radicand);
        }
        let s = self.direction.sign();
        Ok((shift * self.c - self.c * (self.d + s * radicand.sqrt())).exp())
    }
}

/// `E[e^{-lam T}]` for the first time `B_t` meets `c + d t`, counting paths
/// that never meet the line as zero.
pub fn laplace_hitting(c: f64, d: f64, lam: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Domain(format!(
            "c must be finite and non-zero, got {c}"
        )));
    }
    let radicand = d * d + 2.0 * lam;
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "transform undefined: d^2 + 2 lam = {radicand} < 0"
        )));
    }
    let s = if c > 0.0 { 1.0 } else { -1.0 };
    Ok((-c * (d + s * radicand.sqrt())).exp())
}

/// The six signed terms of the expected payoff. The first three are the
/// (uncapped) expected fee, the last three the no-fee payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffTerms {
    pub terms: [f64; 6],
}

impl PayoffTerms {
    pub fn fee_sum(&self) -> f64 {
        self.terms[0] + self.terms[1] + self.terms[2]
    }

    pub fn no_fee_sum(&self) -> f64 {
        self.terms[3] + self.terms[4] + self.terms[5]
    }
}

fn radicand_error(which: ExitAssumption) -> impl Fn(f64) -> Error {
    move |_| Error::Assumption(vec![which])
}

pub fn payoff_terms(threshold: &StoppingThreshold, p: &ModelParams) -> Result<PayoffTerms> {
    require_exit_assumptions(p)?;
    let (g, r, m, rho, sigma) = (p.g(), p.r(), p.m(), p.rho(), p.sigma());
    let reward = radicand_error(ExitAssumption::RewardRadicand);
    let t1 = 0.5 * threshold.tilted(0.0, -(g + r - m - rho)).map_err(&reward)?;
    let t2 = 0.5 * threshold.tilted(0.0, -(g - m - rho)).map_err(&reward)?;
    let t3 = -threshold
        .tilted(0.0, -(g - p.sigma_sq() / 4.0 - m - 2.0 * rho) / 2.0)
        .map_err(radicand_error(ExitAssumption::SqrtFeeRadicand))?;
    let t4 = threshold
        .tilted(sigma / 2.0, (m + 2.0 * rho) / 2.0)
        .map_err(&reward)?;
    let t5 = -0.5 * threshold.tilted(sigma, -(r - rho - m)).map_err(&reward)?;
    let t6 = -0.5 * threshold.tilted(sigma, rho + m).map_err(&reward)?;
    Ok(PayoffTerms {
        terms: [t1, t2, t3, t4, t5, t6],
    })
}

/// Expected payoff of the threshold strategy relative to staking everything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffBreakdown {
    /// Expected fee income, `min{fee sum, K}`; zero without fees.
    pub fee: f64,
    pub impermanent_loss: f64,
    /// Gain (positive) or cost (negative) of staking half instead of all.
    pub opportunity: f64,
    pub no_fee_total: f64,
    pub with_fee_total: f64,
    /// True when the fee cap binds.
    pub fee_capped: bool,
}

pub fn expected_payoff(
    threshold: &StoppingThreshold,
    p: &ModelParams,
    with_fees: bool,
) -> Result<PayoffBreakdown> {
    let terms = payoff_terms(threshold, p)?;
    let (r, m, rho, sigma) = (p.r(), p.m(), p.rho(), p.sigma());
    let reward = radicand_error(ExitAssumption::RewardRadicand);
    let hold = threshold.tilted(0.0, rho).map_err(&reward)?;
    let impermanent_loss = 0.5
        * (-threshold.tilted(sigma, m + rho).map_err(&reward)? - hold
            + 2.0
                * threshold
                    .tilted(sigma / 2.0, m / 2.0 + rho)
                    .map_err(&reward)?);
    let opportunity = 0.5 * (-threshold.tilted(sigma, m + rho - r).map_err(&reward)? + hold);
    let no_fee_total = impermanent_loss + opportunity;
    let (fee, fee_capped) = if with_fees {
        let raw = terms.fee_sum();
        (raw.min(p.fee_cap_k()), raw > p.fee_cap_k())
    } else {
        (0.0, false)
    };
    Ok(PayoffBreakdown {
        fee,
        impermanent_loss,
        opportunity,
        no_fee_total,
        with_fee_total: fee + no_fee_total,
        fee_capped,
    })
}

/// Objective maximized by [`optimize_exit`].
pub fn exit_objective(c: f64, p: &ModelParams, with_fees: bool) -> Result<f64> {
    let threshold = StoppingThreshold::new(c, p)?;
    let terms = payoff_terms(&threshold, p)?;
    let fee = if with_fees {
        terms.fee_sum().min(p.fee_cap_k())
    } else {
        0.0
    };
    Ok(fee + terms.no_fee_sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocCheck {
    pub residual: f64,
    pub second_order_ok: bool,
}

/// The coefficients `D1, D2, D3` of the no-fee first-order condition.
pub fn foc_coefficients(p: &ModelParams) -> [f64; 3] {
    let (sigma, d, r, m, rho) = (p.sigma(), p.derived().d, p.r(), p.m(), p.rho());
    [
        -sigma / 2.0 + d - (d * d + m + 2.0 * rho).sqrt(),
        -sigma + d - (d * d - 2.0 * (r - rho - m)).sqrt(),
        -sigma + d - (d * d + 2.0 * (rho + m)).sqrt(),
    ]
}

/// Derivative of the no-fee payoff in `c` (for `c < 0`) and the sign of its
/// second derivative.
pub fn foc_residual(c: f64, p: &ModelParams) -> Result<FocCheck> {
    if !(c < 0.0) {
        return Err(Error::Domain(format!(
            "first-order condition is defined for c < 0, got {c}"
        )));
    }
    require_exit_assumptions(p)?;
    let [d1, d2, d3] = foc_coefficients(p);
    let (e1, e2, e3) = ((-c * d1).exp(), (-c * d2).exp(), (-c * d3).exp());
    Ok(FocCheck {
        residual: -d1 * e1 + 0.5 * d2 * e2 + 0.5 * d3 * e3,
        second_order_ok: d1 * d1 * e1 - 0.5 * d2 * d2 * e2 - 0.5 * d3 * d3 * e3 < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoFees,
    WithFees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Most negative threshold considered.
    pub c_min: f64,
    pub grid_points: usize,
    /// Width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c_min: -200.0,
            grid_points: 4000,
            refine_tol: 1e-7,
        }
    }
}

/// Smallest `|c|` on the search grid.
const NEAR_ZERO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitOptimum {
    pub c_star: f64,
    /// Exit price `p0 e^{sigma c*}`.
    pub l_star: f64,
    pub l_over_p0: f64,
    pub v_star: f64,
    pub regime: Regime,
    /// First-order residual at `c*` (no-fee regime only).
    pub foc_residual: Option<f64>,
    pub second_order_ok: Option<bool>,
    /// The grid maximum sat at an end of the search range.
    pub boundary: bool,
    /// Largest objective value found on the stop-win side `c > 0`.
    pub up_side_max: f64,
}

pub fn optimize_exit(
    p: &ModelParams,
    with_fees: bool,
    search: &SearchConfig,
) -> Result<ExitOptimum> {
    require_exit_assumptions(p)?;
    if !(search.c_min < -NEAR_ZERO) || search.grid_points < 3 || !(search.refine_tol > 0.0) {
        return Err(Error::Domain(format!(
            "search needs c_min < -{NEAR_ZERO}, at least 3 grid points and a positive tolerance, got {search:?}"
        )));
    }
    let objective = |c: f64| exit_objective(c, p, with_fees);

    let magnitudes = log_grid(NEAR_ZERO, -search.c_min, search.grid_points);
    let mut values = Vec::with_capacity(magnitudes.len());
    for &a in &magnitudes {
        values.push(objective(-a)?);
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "objective not finite at c = {}",
                -magnitudes[i]
            )));
        }
        if *v > values[best] {
            best = i;
        }
    }
    let last = magnitudes.len() - 1;
    let boundary = best == 0 || best == last;
    let lo = -magnitudes[(best + 1).min(last)];
    let hi = -magnitudes[best.saturating_sub(1)];
    let (mut c_star, mut v_star) = golden_section_max(
        |c| objective(c).unwrap_or(f64::NEG_INFINITY),
        lo,
        hi,
        search.refine_tol,
        10_000,
    );
    if values[best] > v_star {
        c_star = -magnitudes[best];
        v_star = values[best];
    }

    let mut up_side_max = f64::NEG_INFINITY;
    for a in log_grid(NEAR_ZERO, -search.c_min, search.grid_points) {
        up_side_max = up_side_max.max(objective(a)?);
    }
    if !with_fees && up_side_max > 0.0 {
        return Err(Error::Numerical(format!(
            "no-fee payoff is positive ({up_side_max}) on the stop-win side"
        )));
    }

    let (foc_residual, second_order_ok) = if with_fees {
        (None, None)
    } else {
        let foc = foc_residual(c_star, p)?;
        (Some(foc.residual), Some(foc.second_order_ok))
    };
    let l_over_p0 = (p.sigma() * c_star).exp();
    Ok(ExitOptimum {
        c_star,
        l_star: p.p0() * l_over_p0,
        l_over_p0,
        v_star,
        regime: if with_fees {
            Regime::WithFees
        } else {
            Regime::NoFees
        },
        foc_residual,
        second_order_ok,
        boundary,
        up_side_max,
    })
}
