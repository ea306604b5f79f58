use lpstake::allocation::{
    allocation_objective, cumulative_discounted_fee, fee_threshold_phi, minimal_fee_rate,
    optimal_allocation, AllocationDecision,
};
use lpstake::cpmm::{check_provision_condition, position_value, rebalance_pool};
use lpstake::exit_timing::{
    expected_payoff, laplace_hitting, optimize_exit, payoff_terms, SearchConfig, StoppingThreshold,
};
use lpstake::market::{
    at_parity_boundary, check_exit_assumptions, check_staking_incentive, staking_margin,
};
use lpstake::mc::{estimate_exit_payoff, McEstimate, SimConfig};
use lpstake::tables::reproduce_table;
use lpstake::ModelParams;
use serde_json::{json, Value};

use crate::output::Report;
use crate::{
    AllocateArgs, DecomposeArgs, ExitArgs, Failure, FeeCurveArgs, FeeToggle, PoolArgs,
    SimulateArgs, TableArgs,
};

pub const DECOMPOSE_HEADER: &[&str] = &[
    "c",
    "l_over_p0",
    "fee",
    "impermanent_loss",
    "opportunity",
    "no_fee_total",
    "with_fee_total",
];

pub const TABLE_HEADER: &[&str] = &[
    "setting",
    "parameter",
    "value",
    "no_fee_c_star",
    "no_fee_l_star",
    "no_fee_v_star",
    "with_fee_c_star",
    "with_fee_l_star",
    "with_fee_v_star",
];

pub const FEE_CURVE_HEADER: &[&str] = &["t", "fee_rate", "fee_threshold", "capped"];

impl FeeToggle {
    fn enabled(&self) -> bool {
        self.fees && !self.no_fees
    }
}

pub fn validate(p: &ModelParams) -> Report {
    let violations: Vec<&str> = check_exit_assumptions(p).iter().map(|a| a.id()).collect();
    Report::Object(json!({
        "staking_incentive": check_staking_incentive(p),
        "staking_margin": staking_margin(p),
        "parity_boundary": at_parity_boundary(p),
        "exit_assumption_violations": violations,
        "derived": { "d": p.derived().d },
    }))
}

fn decision_json(d: &AllocationDecision) -> Value {
    json!({
        "a_hold": d.a_hold,
        "x_lp_lst": d.x_lp_lst,
        "y_lp_eth": d.y_lp_eth,
        "provides_liquidity": d.provides_liquidity(),
    })
}

pub fn allocate(p: &ModelParams, args: &AllocateArgs) -> Result<Report, Failure> {
    let schedule = cumulative_discounted_fee(p, args.t)?;
    let fee = args.fee_override.unwrap_or(schedule.cumulative_fee);
    let decision = optimal_allocation(p, args.t, fee)?;
    let objective = |d: &AllocationDecision| allocation_objective(d, p, args.t, fee);
    Ok(Report::Object(json!({
        "t": args.t,
        "decision": decision_json(&decision),
        "phi_threshold": schedule.phi_threshold,
        "cumulative_fee": fee,
        "fee_overridden": args.fee_override.is_some(),
        "schedule_capped": schedule.capped,
        "indifference_gap": fee - schedule.phi_threshold,
        "objective": {
            "chosen": objective(&decision)?,
            "stake_all": objective(&AllocationDecision::inaction())?,
            "equal_risk": objective(&AllocationDecision::equal_risk(p.p0()))?,
        },
    })))
}

pub fn pool(p: &ModelParams, args: &PoolArgs) -> Result<Report, Failure> {
    let rebalanced = rebalance_pool(args.invariant_l, args.price)?;
    let mut report = json!({
        "invariant_l": args.invariant_l,
        "price": args.price,
        "u_star": rebalanced.u_star,
        "v_star": rebalanced.v_star,
        "pool_value": rebalanced.pool_value,
    });
    if let (Some(x), Some(y)) = (args.lst_deposit, args.eth_deposit) {
        report["position"] = json!({
            "lst_deposit": x,
            "eth_deposit": y,
            "position_value": position_value(x, y, args.price)?,
            "hold_value": x * args.price + y,
            "provision_condition": check_provision_condition(x, y, p.p0())?,
        });
    }
    Ok(Report::Object(report))
}

pub fn fee_curve(p: &ModelParams, args: &FeeCurveArgs) -> Result<Report, Failure> {
    if !(args.t_max > 0.0 && args.t_max.is_finite()) || args.steps == 0 {
        return Err(Failure::usage(
            "fee-curve needs --t-max > 0 and --steps >= 1",
        ));
    }
    let mut rows = Vec::with_capacity(args.steps + 1);
    for i in 0..=args.steps {
        let t = args.t_max * i as f64 / args.steps as f64;
        let eval = cumulative_discounted_fee(p, t)?;
        rows.push(vec![
            json!(t),
            json!(minimal_fee_rate(p, t)?),
            json!(fee_threshold_phi(p, t)?),
            json!(eval.capped),
        ]);
    }
    Ok(Report::Table {
        header: FEE_CURVE_HEADER,
        rows,
    })
}

pub fn exit(p: &ModelParams, args: &ExitArgs) -> Result<Report, Failure> {
    let defaults = SearchConfig::default();
    let search = SearchConfig {
        c_min: args.c_min.unwrap_or(defaults.c_min),
        grid_points: args.grid.unwrap_or(defaults.grid_points),
        refine_tol: args.tol.unwrap_or(defaults.refine_tol),
    };
    let opt = optimize_exit(p, args.toggle.enabled(), &search)?;
    Ok(Report::Object(
        serde_json::to_value(opt).expect("optimum serializes"),
    ))
}

pub fn decompose(p: &ModelParams, args: &DecomposeArgs) -> Result<Report, Failure> {
    let (lo, hi) = (args.c_from.min(args.c_to), args.c_from.max(args.c_to));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Failure::usage("--c-from and --c-to must be finite"));
    }
    if lo <= 0.0 && hi >= 0.0 && !args.split {
        return Err(Failure::usage(format!(
            "range [{}, {}] reaches c = 0; pass --split to sweep both sides",
            args.c_from, args.c_to
        )));
    }
    if args.steps < 2 && args.c_from != args.c_to {
        return Err(Failure::usage("--steps must be at least 2 for a range"));
    }
    let with_fees = args.toggle.enabled();
    let n = args.steps.max(1);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let c = if n == 1 {
            args.c_from
        } else {
            args.c_from + (args.c_to - args.c_from) * i as f64 / (n - 1) as f64
        };
        if c == 0.0 {
            continue;
        }
        let th = StoppingThreshold::new(c, p)?;
        let b = expected_payoff(&th, p, with_fees)?;
        rows.push(vec![
            json!(c),
            json!(th.l_over_p0()),
            json!(b.fee),
            json!(b.impermanent_loss),
            json!(b.opportunity),
            json!(b.no_fee_total),
            json!(b.with_fee_total),
        ]);
    }
    Ok(Report::Table {
        header: DECOMPOSE_HEADER,
        rows,
    })
}

/// `x` rounded to seven significant digits.
fn sig7(x: f64) -> Value {
    if x == 0.0 || !x.is_finite() {
        return json!(x);
    }
    let scale = 10f64.powi(6 - x.abs().log10().floor() as i32);
    json!((x * scale).round() / scale)
}

pub fn table(args: &TableArgs) -> Result<Report, Failure> {
    if !lpstake::tables::TABLE_IDS.contains(&args.table) {
        return Err(Failure::usage(format!(
            "unknown table {}; choose 1 to 6",
            args.table
        )));
    }
    let rows = reproduce_table(args.table, &SearchConfig::default())?
        .into_iter()
        .map(|row| {
            vec![
                json!(row.point.setting.name()),
                json!(row.point.parameter),
                json!(row.point.value),
                sig7(row.no_fee.c_star),
                sig7(row.no_fee.l_over_p0),
                sig7(row.no_fee.v_star),
                sig7(row.with_fee.c_star),
                sig7(row.with_fee.l_over_p0),
                sig7(row.with_fee.v_star),
            ]
        })
        .collect();
    Ok(Report::Table {
        header: TABLE_HEADER,
        rows,
    })
}

fn compare(est: &McEstimate, closed_form: f64) -> Value {
    json!({
        "estimate": est.mean,
        "std_error": est.std_error,
        "n_hit": est.n_hit,
        "truncation_mass": est.truncation_mass,
        "closed_form": closed_form,
        "z_score": est.z_score(closed_form),
    })
}

pub fn simulate(p: &ModelParams, args: &SimulateArgs) -> Result<Report, Failure> {
    let th = StoppingThreshold::new(args.c, p)?;
    let mut config = SimConfig::for_threshold(args.c, th.d(), args.paths, args.seed);
    config.dt = args.dt;
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    let with_fees = args.toggle.enabled();
    let mc = estimate_exit_payoff(&th, p, with_fees, &config)?;
    let closed = expected_payoff(&th, p, with_fees)?;
    let fee_sum = payoff_terms(&th, p)?.fee_sum();
    let mut quantities = json!({
        "fee_sum": compare(&mc.fee_sum, fee_sum),
        "impermanent_loss": compare(&mc.impermanent_loss, closed.impermanent_loss),
        "opportunity": compare(&mc.opportunity, closed.opportunity),
        "no_fee_total": compare(&mc.no_fee_total, closed.no_fee_total),
        "hit_fraction": compare(&mc.hit_fraction, laplace_hitting(args.c, th.d(), 0.0)?),
    });
    if with_fees {
        quantities["with_fee_total"] = compare(&mc.with_fee_total, closed.with_fee_total);
    }
    Ok(Report::Object(json!({
        "c": args.c,
        "l_over_p0": th.l_over_p0(),
        "with_fees": with_fees,
        "fee_capped": mc.fee_capped,
        "config": config,
        "quantities": quantities,
    })))
}
