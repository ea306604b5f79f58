//! Model parameters, standing-assumption checks, and closed-form moments of
//! the discounted LST price.
//!
//! The LST price follows `dP/P = g dt + sigma dB`, and redeeming through the
//! staking protocol at time `t` realizes `D_t P_t` with `D_t = exp(-m t)`.
//! Rates share one time unit, documented as years; nothing depends on that
//! choice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    /// Price stays at parity with ETH and the holder's balance grows at `r`.
    Rebasing,
    /// Balance is fixed and the price grows at `g`.
    RewardBearing,
}

/// Unvalidated parameter record, mirroring the JSON document on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub g: f64,
    pub sigma: f64,
    pub r: f64,
    pub m: f64,
    pub rho: f64,
    pub p0: f64,
    pub fee_cap_k: f64,
    pub token_kind: TokenKind,
}

/// Validated market and protocol parameters.
///
/// Construction enforces positivity of `sigma`, `m`, `rho`, `p0` and the fee
/// cap, plus the coupling between token kind and reward channel: rebasing
/// tokens have `g = 0` and `p0 = 1`, reward-bearing tokens have `r = 0`,
/// `g > 0` and `p0 >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamSpec", into = "ParamSpec")]
pub struct ModelParams {
    spec: ParamSpec,
}

impl TryFrom<ParamSpec> for ModelParams {
    type Error = Error;

    fn try_from(spec: ParamSpec) -> Result<Self> {
        ModelParams::new(spec)
    }
}

impl From<ModelParams> for ParamSpec {
    fn from(p: ModelParams) -> Self {
        p.spec
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}

impl ModelParams {
    pub fn new(spec: ParamSpec) -> Result<Self> {
        let ParamSpec {
            g,
            sigma,
            r,
            m,
            rho,
            p0,
            fee_cap_k,
            token_kind,
        } = spec;
        for (name, v) in [
            ("g", g),
            ("sigma", sigma),
            ("r", r),
            ("m", m),
            ("rho", rho),
            ("p0", p0),
            ("fee_cap_k", fee_cap_k),
        ] {
            require(v.is_finite(), || format!("{name} must be finite, got {v}"))?;
        }
        require(sigma > 0.0, || {
            format!("sigma must be positive, got {sigma}")
        })?;
        require(m > 0.0, || format!("m must be positive, got {m}"))?;
        require(rho > 0.0, || format!("rho must be positive, got {rho}"))?;
        require(p0 > 0.0, || format!("p0 must be positive, got {p0}"))?;
        require(fee_cap_k > 0.0, || {
            format!("fee_cap_k must be positive, got {fee_cap_k}")
        })?;
        require(r >= 0.0, || format!("r must be non-negative, got {r}"))?;
        match token_kind {
            TokenKind::Rebasing => {
                require(g == 0.0, || {
                    format!("rebasing tokens require g = 0, got {g}")
                })?;
                require(p0 == 1.0, || {
                    format!("rebasing tokens trade at parity, p0 must be 1, got {p0}")
                })?;
            }
            TokenKind::RewardBearing => {
                require(r == 0.0, || {
                    format!("reward-bearing tokens require r = 0, got {r}")
                })?;
                require(g > 0.0, || {
                    format!("reward-bearing tokens require g > 0, got {g}")
                })?;
                require(p0 >= 1.0, || {
                    format!("reward-bearing tokens require p0 >= 1, got {p0}")
                })?;
            }
        }
        Ok(ModelParams { spec })
    }

    /// Rebasing token at parity (`p0 = 1`, `g = 0`).
    pub fn rebasing(r: f64, sigma_sq: f64, m: f64, rho: f64, fee_cap_k: f64) -> Result<Self> {
        Self::new(ParamSpec {
            g: 0.0,
            sigma: sigma_sq.sqrt(),
            r,
            m,
            rho,
            p0: 1.0,
            fee_cap_k,
            token_kind: TokenKind::Rebasing,
        })
    }

    pub fn reward_bearing(
        g: f64,
        p0: f64,
        sigma_sq: f64,
        m: f64,
        rho: f64,
        fee_cap_k: f64,
    ) -> Result<Self> {
        Self::new(ParamSpec {
            g,
            sigma: sigma_sq.sqrt(),
            r: 0.0,
            m,
            rho,
            p0,
            fee_cap_k,
            token_kind: TokenKind::RewardBearing,
        })
    }

    pub fn spec(&self) -> ParamSpec {
        self.spec
    }

    pub fn g(&self) -> f64 {
        self.spec.g
    }
    pub fn sigma(&self) -> f64 {
        self.spec.sigma
    }
    pub fn sigma_sq(&self) -> f64 {
        self.spec.sigma * self.spec.sigma
    }
    pub fn r(&self) -> f64 {
        self.spec.r
    }
    pub fn m(&self) -> f64 {
        self.spec.m
    }
    pub fn rho(&self) -> f64 {
        self.spec.rho
    }
    pub fn p0(&self) -> f64 {
        self.spec.p0
    }
    pub fn fee_cap_k(&self) -> f64 {
        self.spec.fee_cap_k
    }
    pub fn token_kind(&self) -> TokenKind {
        self.spec.token_kind
    }

    pub fn derived(&self) -> DerivedCoefficients {
        DerivedCoefficients {
            d: self.sigma() / 2.0 - self.g() / self.sigma(),
        }
    }
}

/// Coefficients derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedCoefficients {
    /// Slope of the moving barrier in Brownian units: `sigma/2 - g/sigma`.
    /// The scaled log price `ln(P_t/P_0)/sigma` equals `B_t - d t`.
    pub d: f64,
}

/// One of the four conditions under which the fixed-threshold exit problem
/// has finite, non-degenerate expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "&'static str")]
pub enum ExitAssumption {
    /// `d^2 - 2(g + r - m - rho) > 0`
    RewardRadicand,
    /// `d^2 - (g - sigma^2/4 - m - 2 rho) > 0`
    SqrtFeeRadicand,
    /// `d > 0`
    DPositive,
    /// `sigma^2/4 - m > 0`
    SigmaSqQuarterGtM,
}

impl ExitAssumption {
    pub const ALL: [ExitAssumption; 4] = [
        ExitAssumption::RewardRadicand,
        ExitAssumption::SqrtFeeRadicand,
        ExitAssumption::DPositive,
        ExitAssumption::SigmaSqQuarterGtM,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExitAssumption::RewardRadicand => "reward_radicand_positive",
            ExitAssumption::SqrtFeeRadicand => "sqrt_fee_radicand_positive",
            ExitAssumption::DPositive => "d_positive",
            ExitAssumption::SigmaSqQuarterGtM => "sigma_sq_quarter_gt_m",
        }
    }

    /// Value of the expression that must be strictly positive.
    pub fn margin(self, p: &ModelParams) -> f64 {
        let d = p.derived().d;
        match self {
            ExitAssumption::RewardRadicand => d * d - 2.0 * (p.g() + p.r() - p.m() - p.rho()),
            ExitAssumption::SqrtFeeRadicand => {
                d * d - (p.g() - p.sigma_sq() / 4.0 - p.m() - 2.0 * p.rho())
            }
            ExitAssumption::DPositive => d,
            ExitAssumption::SigmaSqQuarterGtM => p.sigma_sq() / 4.0 - p.m(),
        }
    }
}

impl From<ExitAssumption> for &'static str {
    fn from(a: ExitAssumption) -> Self {
        a.id()
    }
}

impl fmt::Display for ExitAssumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// `r + g - rho - m`, the net growth of a staked position after discounting.
pub fn staking_margin(p: &ModelParams) -> f64 {
    p.r() + p.g() - p.rho() - p.m()
}

/// True when staking through the protocol beats holding ETH:
/// `r + g - rho - m > ln p0` with `ln p0 >= 0`.
///
/// `ln p0 = 0` (every rebasing token) is accepted; see
/// [`at_parity_boundary`].
pub fn check_staking_incentive(p: &ModelParams) -> bool {
    let ln_p0 = p.p0().ln();
    ln_p0 >= 0.0 && staking_margin(p) > ln_p0
}

/// Flags the `ln p0 = 0` boundary, where the strict form `ln p0 > 0` of the
/// incentive condition cannot hold.
pub fn at_parity_boundary(p: &ModelParams) -> bool {
    p.p0().ln() == 0.0
}

pub fn require_staking_incentive(p: &ModelParams) -> Result<()> {
    if check_staking_incentive(p) {
        Ok(())
    } else {
        Err(Error::NoStakingIncentive {
            margin: staking_margin(p),
            ln_p0: p.p0().ln(),
        })
    }
}

/// Identifiers of the violated exit-timing assumptions, in a fixed order.
pub fn check_exit_assumptions(p: &ModelParams) -> Vec<ExitAssumption> {
    ExitAssumption::ALL
        .into_iter()
        .filter(|a| !(a.margin(p) > 0.0))
        .collect()
}

pub fn require_exit_assumptions(p: &ModelParams) -> Result<()> {
    let violated = check_exit_assumptions(p);
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::Assumption(violated))
    }
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

/// `E[D_t P_t] = p0 exp((g - m) t)`.
pub fn expected_discounted_price(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(p.p0() * ((p.g() - p.m()) * t).exp())
}

/// `E[sqrt(D_t P_t)] = sqrt(p0) exp((g/2 - sigma^2/8 - m/2) t)`.
pub fn expected_sqrt_discounted_price(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let rate = p.g() / 2.0 - p.sigma_sq() / 8.0 - p.m() / 2.0;
    Ok(p.p0().sqrt() * (rate * t).exp())
}

/// `E[(sqrt(D_t P_t) - sqrt(p0))^2]`, the undiscounted impermanent-loss
/// moment per unit of LST supplied.
pub fn squared_deviation(p: &ModelParams, t: f64) -> Result<f64> {
    let mean = expected_discounted_price(p, t)?;
    let root = expected_sqrt_discounted_price(p, t)?;
    Ok(mean - 2.0 * p.p0().sqrt() * root + p.p0())
}
