//! Monte Carlo estimates of the closed-form expectations.
//!
//! Paths are simulated independently of the transform formulas: the scaled
//! log price `X_t = ln(P_t/p0)/sigma = B_t - d t` is advanced with exact
//! Gaussian increments and the first passage through `c` is detected with a
//! Brownian-bridge crossing test between grid points. Steps are `dt` near
//! the barrier and grow with the squared distance from it; a crossing inside
//! a long step gets its hit time from the bridge's first-passage law. The
//! payoff is then evaluated at the hitting time with the price pinned to the
//! barrier.
//!
//! Each path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! and sums are accumulated in path order, so estimates are reproducible
//! bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exit_timing::StoppingThreshold;
use crate::market::{require_exit_assumptions, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Finest time step; used whenever a path is close to the barrier.
    pub dt: f64,
    /// Paths still running at this time are censored.
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 1e-3;

    /// Defaults for a threshold. Stop-loss levels run until the drift has
    /// carried the path `8` standard deviations past the barrier (at least
    /// 200 time units); stop-win levels, which most paths never reach, run
    /// for `2000/d`.
    pub fn for_threshold(c: f64, d: f64, n_paths: usize, seed: u64) -> Self {
        let horizon = if d <= 0.0 {
            200.0
        } else if c > 0.0 {
            (2000.0 / d).max(200.0)
        } else {
            // smallest T with d T - 8 sqrt(T) >= |c|
            let root = (8.0 + (64.0 + 4.0 * d * c.abs()).sqrt()) / (2.0 * d);
            (root * root).max(200.0)
        };
        SimConfig {
            n_paths,
            dt: Self::DEFAULT_DT,
            horizon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0
            || !(self.dt > 0.0)
            || !(self.horizon > 0.0)
            || !self.horizon.is_finite()
        {
            return Err(Error::Domain(format!(
                "simulation needs n_paths >= 1, dt > 0 and a finite horizon > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_hit: usize,
    /// Fraction of paths censored (never hit within the horizon).
    pub truncation_mass: f64,
}

impl McEstimate {
    /// `(mean - closed_form) / std_error`; zero when both the error and the
    /// discrepancy vanish.
    pub fn z_score(&self, closed_form: f64) -> f64 {
        let diff = self.mean - closed_form;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Running mean and variance (Welford), fed in path order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }

    fn estimate(&self, n_hit: usize) -> McEstimate {
        McEstimate {
            mean: self.mean,
            std_error: self.std_error(),
            n_hit,
            truncation_mass: (self.n - n_hit) as f64 / self.n as f64,
        }
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Sample paths of `ln(P_t/p0)` on the grid `0, dt, 2 dt, ..` up to the
/// horizon.
pub fn simulate_log_price(p: &ModelParams, config: &SimConfig) -> Result<Vec<Vec<(f64, f64)>>> {
    config.validate()?;
    let steps = (config.horizon / config.dt).ceil() as usize;
    let drift = (p.g() - p.sigma_sq() / 2.0) * config.dt;
    let vol = p.sigma() * config.dt.sqrt();
    Ok((0..config.n_paths)
        .map(|i| {
            let mut rng = path_rng(config.seed, i);
            let mut path = Vec::with_capacity(steps + 1);
            let mut x = 0.0;
            path.push((0.0, x));
            for k in 1..=steps {
                let z: f64 = rng.sample(StandardNormal);
                x += drift + vol * z;
                path.push(((k as f64 * config.dt).min(config.horizon), x));
            }
            path
        })
        .collect())
}

/// Monte Carlo moments of the discounted price at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceMoments {
    pub log_price: McEstimate,
    pub growth: McEstimate,
    pub discounted_price: McEstimate,
    pub sqrt_discounted_price: McEstimate,
}

/// Samples `ln(P_t/p0)` exactly at time `t` (a single Gaussian step) and
/// estimates `E[ln P~_t]`, `E[P~_t]`, `E[D_t P_t]` and `E[sqrt(D_t P_t)]`.
pub fn estimate_price_moments(p: &ModelParams, t: f64, config: &SimConfig) -> Result<PriceMoments> {
    config.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let drift = (p.g() - p.sigma_sq() / 2.0) * t;
    let vol = p.sigma() * t.sqrt();
    let discount = (-p.m() * t).exp();
    let mut acc = [Moments::default(); 4];
    for i in 0..config.n_paths {
        let mut rng = path_rng(config.seed, i);
        let z: f64 = rng.sample(StandardNormal);
        let x = drift + vol * z;
        let realized = discount * p.p0() * x.exp();
        acc[0].push(x);
        acc[1].push(x.exp());
        acc[2].push(realized);
        acc[3].push(realized.sqrt());
    }
    let n = config.n_paths;
    Ok(PriceMoments {
        log_price: acc[0].estimate(n),
        growth: acc[1].estimate(n),
        discounted_price: acc[2].estimate(n),
        sqrt_discounted_price: acc[3].estimate(n),
    })
}

/// A step is never longer than the squared distance to the barrier divided
/// by this, so a single step crosses with probability below ~1%.
const DISTANCE_STEPS: f64 = 3.0;
const MAX_STEP: f64 = 1.0;
/// Drift-away paths further than `|c| + KILL_DECADES / d` from the barrier
/// are censored; their chance of ever returning is below `e^{-2 KILL_DECADES}`.
const KILL_DECADES: f64 = 40.0;

/// First time `X_t = B_t - d t` (started at 0) reaches `barrier`, or `None`
/// if the path is censored.
fn first_passage<R: Rng>(barrier: f64, d: f64, config: &SimConfig, rng: &mut R) -> Option<f64> {
    let up = barrier > 0.0;
    let drift_away = (up && d > 0.0) || (!up && d < 0.0);
    let kill_distance = if drift_away {
        barrier.abs() + KILL_DECADES / d.abs()
    } else {
        f64::INFINITY
    };
    let mut x = 0.0f64;
    let mut t = 0.0f64;
    loop {
        let gap = if up { barrier - x } else { x - barrier };
        if gap > kill_distance {
            return None;
        }
        let remaining = config.horizon - t;
        if remaining <= 0.0 {
            return None;
        }
        let h = (gap / DISTANCE_STEPS)
            .powi(2)
            .clamp(config.dt, MAX_STEP)
            .min(remaining);
        let z: f64 = rng.sample(StandardNormal);
        let next = x - d * h + h.sqrt() * z;
        let next_gap = if up { barrier - next } else { next - barrier };
        // A path ending beyond the barrier crossed it; otherwise the bridge
        // between the two grid values touched it with this probability.
        let crossed = next_gap <= 0.0 || {
            let u: f64 = rng.random();
            u < (-2.0 * gap * next_gap / h).exp()
        };
        if crossed {
            if h <= config.dt {
                return Some(t + 0.5 * h);
            }
            let u: f64 = rng.random();
            return Some(t + bridge_hit_time(gap, next_gap, h, u));
        }
        x = next;
        t += h;
    }
}

const HIT_TIME_NODES: usize = 256;

/// Quantile `u` of the first time a Brownian bridge from `gap > 0` to
/// `end_gap` over `[0, h]` reaches zero, given that it does.
///
/// The density is proportional to `gap s^{-3/2} e^{-gap^2/2s}` (first passage)
/// times `(h-s)^{-1/2} e^{-end_gap^2/2(h-s)}` (return to the end value). With
/// `s = h (1 - w^2)` the second factor's singularity cancels, leaving a smooth
/// density in `w` that is inverted on a fixed grid.
fn bridge_hit_time(gap: f64, end_gap: f64, h: f64, u: f64) -> f64 {
    let log_density = |w: f64| {
        let s = h * (1.0 - w * w);
        if s <= 0.0 || w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -1.5 * s.ln() - gap * gap / (2.0 * s) - end_gap * end_gap / (2.0 * h * w * w)
    };
    let nodes: Vec<f64> = (0..=HIT_TIME_NODES)
        .map(|i| i as f64 / HIT_TIME_NODES as f64)
        .collect();
    let logs: Vec<f64> = nodes.iter().map(|&w| log_density(w)).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return 0.5 * h;
    }
    let dens: Vec<f64> = logs.iter().map(|&l| (l - peak).exp()).collect();
    let mut cdf = vec![0.0; dens.len()];
    for i in 1..dens.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]);
    }
    let target = u * cdf[cdf.len() - 1];
    let i = cdf.partition_point(|&c| c < target).clamp(1, cdf.len() - 1);
    let span = cdf[i] - cdf[i - 1];
    let frac = if span > 0.0 {
        (target - cdf[i - 1]) / span
    } else {
        0.5
    };
    let w = nodes[i - 1] + frac / HIT_TIME_NODES as f64;
    h * (1.0 - w * w)
}

/// Estimate of `E[e^{-lam T}]` for the first time `B_t` meets `c + d t`,
/// with censored paths contributing zero.
pub fn estimate_hitting_transform(
    c: f64,
    d: f64,
    lam: f64,
    config: &SimConfig,
) -> Result<McEstimate> {
    config.validate()?;
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Domain(format!(
            "c must be finite and non-zero, got {c}"
        )));
    }
    if d * d + 2.0 * lam < 0.0 {
        return Err(Error::Domain(format!(
            "transform undefined: d^2 + 2 lam = {} < 0",
            d * d + 2.0 * lam
        )));
    }
    let mut acc = Moments::default();
    let mut hits = 0;
    for i in 0..config.n_paths {
        let mut rng = path_rng(config.seed, i);
        match first_passage(c, d, config, &mut rng) {
            Some(t) => {
                hits += 1;
                acc.push((-lam * t).exp());
            }
            None => acc.push(0.0),
        }
    }
    Ok(acc.estimate(hits))
}

/// Monte Carlo counterpart of [`crate::exit_timing::PayoffBreakdown`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McPayoff {
    /// Uncapped expected fee (sum of the first three payoff terms).
    pub fee_sum: McEstimate,
    /// `min{fee_sum.mean, K}` with fees, zero without.
    pub fee: f64,
    pub fee_capped: bool,
    pub impermanent_loss: McEstimate,
    pub opportunity: McEstimate,
    pub no_fee_total: McEstimate,
    pub with_fee_total: McEstimate,
    /// Fraction of paths that reached the barrier.
    pub hit_fraction: McEstimate,
}

/// Pathwise payoff components at hitting time `t`, price at the barrier.
struct PathPayoff {
    fee: f64,
    impermanent_loss: f64,
    opportunity: f64,
}

fn path_payoff(p: &ModelParams, l_over_p0: f64, t: f64) -> PathPayoff {
    let (g, r, m, rho, s2) = (p.g(), p.r(), p.m(), p.rho(), p.sigma_sq());
    let fee = 0.5 * ((g - m - rho) * t).exp() * ((r * t).exp() + 1.0)
        - ((g / 2.0 - s2 / 8.0 - m / 2.0 - rho) * t).exp();
    // D_T P_T / p0 with P_T = L
    let realized = (-m * t).exp() * l_over_p0;
    let discount = (-rho * t).exp();
    let impermanent_loss = -0.5 * discount * (realized.sqrt() - 1.0).powi(2);
    let opportunity = -0.5 * discount * (realized * (r * t).exp() - 1.0);
    PathPayoff {
        fee,
        impermanent_loss,
        opportunity,
    }
}

pub fn estimate_exit_payoff(
    threshold: &StoppingThreshold,
    p: &ModelParams,
    with_fees: bool,
    config: &SimConfig,
) -> Result<McPayoff> {
    config.validate()?;
    require_exit_assumptions(p)?;
    let mut fee = Moments::default();
    let mut il = Moments::default();
    let mut st = Moments::default();
    let mut total = Moments::default();
    let mut fee_total = Moments::default();
    let mut hit = Moments::default();
    let mut hits = 0;
    let mut pathwise = Vec::with_capacity(config.n_paths);
    for i in 0..config.n_paths {
        let mut rng = path_rng(config.seed, i);
        let payoff = first_passage(threshold.c(), threshold.d(), config, &mut rng)
            .map(|t| path_payoff(p, threshold.l_over_p0(), t));
        let (f, l, s) = match &payoff {
            Some(pp) => {
                hits += 1;
                (pp.fee, pp.impermanent_loss, pp.opportunity)
            }
            None => (0.0, 0.0, 0.0),
        };
        fee.push(f);
        il.push(l);
        st.push(s);
        total.push(l + s);
        hit.push(if payoff.is_some() { 1.0 } else { 0.0 });
        pathwise.push((f, l + s));
    }

    let fee_mean = fee.mean;
    let cap = p.fee_cap_k();
    let fee_capped = with_fees && fee_mean > cap;
    // The cap applies to the expectation, so the with-fee total is either
    // fee + M pathwise or K + M.
    for (f, m) in pathwise {
        let v = if !with_fees {
            m
        } else if fee_capped {
            cap + m
        } else {
            f + m
        };
        fee_total.push(v);
    }
    Ok(McPayoff {
        fee_sum: fee.estimate(hits),
        fee: if with_fees { fee_mean.min(cap) } else { 0.0 },
        fee_capped,
        impermanent_loss: il.estimate(hits),
        opportunity: st.estimate(hits),
        no_fee_total: total.estimate(hits),
        with_fee_total: fee_total.estimate(hits),
        hit_fraction: hit.estimate(hits),
    })
}
