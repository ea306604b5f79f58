//! `lpstake`: allocation answers, exit-level optimization, payoff sweeps,
//! table reproduction and Monte Carlo cross-checks from the command line.

mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpstake::{Error, ModelParams};

use output::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "lpstake", version, about)]
struct Cli {
    /// JSON file with the model parameters.
    #[arg(long, global = true, value_name = "PATH")]
    params: Option<PathBuf>,

    /// Output format; tabular commands default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the staking incentive and the exit-timing assumptions.
    Validate,
    /// Optimal time-0 split for horizon `t`.
    Allocate(AllocateArgs),
    /// Rebalance a pool at a realized price and value a position.
    Pool(PoolArgs),
    /// Minimal fee rate and cumulative fee threshold over time.
    FeeCurve(FeeCurveArgs),
    /// Optimal exit threshold.
    Exit(ExitArgs),
    /// Payoff components over a range of thresholds.
    Decompose(DecomposeArgs),
    /// Reproduce a built-in parameter sweep.
    Table(TableArgs),
    /// Monte Carlo estimate of a threshold strategy against the closed form.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Investment horizon.
    #[arg(long)]
    pub t: f64,
    /// Cumulative discounted fee to use instead of the minimal schedule.
    #[arg(long)]
    pub fee_override: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Product invariant `L` of the pool reserves.
    #[arg(long)]
    pub invariant_l: f64,
    /// Realized price (ETH per LST).
    #[arg(long)]
    pub price: f64,
    #[arg(long, requires = "eth_deposit")]
    pub lst_deposit: Option<f64>,
    #[arg(long, requires = "lst_deposit")]
    pub eth_deposit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FeeCurveArgs {
    #[arg(long)]
    pub t_max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct FeeToggle {
    /// Include transaction fees (capped at K).
    #[arg(long, overrides_with = "no_fees")]
    pub fees: bool,
    /// Ignore transaction fees (default).
    #[arg(long, overrides_with = "fees")]
    pub no_fees: bool,
}

#[derive(Debug, Args)]
pub struct ExitArgs {
    #[command(flatten)]
    pub toggle: FeeToggle,
    /// Most negative threshold searched.
    #[arg(long, allow_hyphen_values = true)]
    pub c_min: Option<f64>,
    /// Number of grid points before refinement.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Refinement tolerance on `c`.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub c_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c_to: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[command(flatten)]
    pub toggle: FeeToggle,
    /// Allow the range to straddle zero; `c = 0` itself is skipped.
    #[arg(long)]
    pub split: bool,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Table number, 1 to 6.
    #[arg(long)]
    pub table: u8,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = lpstake::mc::SimConfig::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub toggle: FeeToggle,
    /// Censoring time; defaults depend on the threshold.
    #[arg(long)]
    pub horizon: Option<f64>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::Domain(_) => 2,
            Error::Assumption(_) | Error::NoStakingIncentive { .. } => 3,
            Error::Numerical(_) => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_params(path: &PathBuf) -> Result<ModelParams, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("bad parameter file {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let params = cli.params.as_ref().map(load_params).transpose()?;
    let need = || params.ok_or_else(|| Failure::usage("this command needs --params <path>"));
    let report: Report = match &cli.command {
        Command::Validate => commands::validate(&need()?),
        Command::Allocate(a) => commands::allocate(&need()?, a)?,
        Command::Pool(a) => commands::pool(&need()?, a)?,
        Command::FeeCurve(a) => commands::fee_curve(&need()?, a)?,
        Command::Exit(a) => commands::exit(&need()?, a)?,
        Command::Decompose(a) => commands::decompose(&need()?, a)?,
        Command::Table(a) => commands::table(a)?,
        Command::Simulate(a) => commands::simulate(&need()?, a)?,
    };
    let text = report.render(cli.format);
    match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
