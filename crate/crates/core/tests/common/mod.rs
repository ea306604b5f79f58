#![allow(dead_code)]

use lpstake::market::{check_exit_assumptions, check_staking_incentive};
use lpstake::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws parameters satisfying the staking incentive and all exit-timing
/// assumptions. `excess` bounds the net growth `r + g - m - rho` above
/// `ln p0`.
pub fn draw_params<R: Rng>(rng: &mut R, excess: (f64, f64)) -> ModelParams {
    loop {
        let sigma_sq: f64 = rng.random_range(0.6..1.0);
        let m_hi = (sigma_sq / 4.0 - 0.02).min(0.10);
        let m = rng.random_range(0.04..m_hi);
        let rho = rng.random_range(0.01..0.05);
        let k = rng.random_range(1.0..4.0);
        let net = rng.random_range(excess.0..excess.1);
        let p = if rng.random_bool(0.5) {
            ModelParams::rebasing(m + rho + net, sigma_sq, m, rho, k)
        } else {
            let p0: f64 = rng.random_range(1.0..1.03);
            ModelParams::reward_bearing(m + rho + net + p0.ln(), p0, sigma_sq, m, rho, k)
        }
        .expect("sampler produces structurally valid params");
        if check_exit_assumptions(&p).is_empty() && check_staking_incentive(&p) {
            return p;
        }
    }
}

/// Largest exponential growth rate among the payoff terms.
pub fn max_growth_rate(p: &ModelParams) -> f64 {
    (p.g() + p.r() - p.m() - p.rho()).max(p.r() - p.m() - p.rho())
}

/// Parameters for which every pathwise payoff term has finite variance:
/// `E[e^{2 a T}]` exists iff `d^2 - 4a > 0`.
pub fn draw_finite_variance_params<R: Rng>(rng: &mut R) -> ModelParams {
    loop {
        let p = draw_params(rng, (0.005, 0.03));
        let d = p.derived().d;
        if d * d - 4.0 * max_growth_rate(&p) > 0.02 {
            return p;
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}
