//! `crgc`: bounds, trade-off curves, the worked example, cost tables and
//! simulations for collaborative regenerating codes.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crgc_core::capacity::{CapacityError, Rational};
use crgc_core::exactcode::ExactCodeError;
use crgc_core::scenarios::ScenarioError;
use crgc_core::tradeoff::TradeoffError;

#[derive(Parser, Debug)]
#[command(name = "crgc", version, about = "Collaborative regenerating codes under selfish and polluting nodes")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact capacities and operating points as JSON.
    Bounds(BoundsArgs),
    /// Optimal repair bandwidth against storage, as CSV.
    Tradeoff(TradeoffArgs),
    /// Replay the (7,3) example over GF(8) end to end.
    ExactDemo(DemoArgs),
    /// Run a multi-generation simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Measure the six repair-cost scenarios next to the published values.
    Tables,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PointArg {
    Msr,
    Mbr,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AdversaryArg {
    Selfish,
    Polluting,
}

#[derive(Args, Debug, Clone)]
struct SystemArgs {
    /// Live nodes contacted by each newcomer.
    #[arg(long)]
    d: u32,
    /// Nodes contacted by a data collector.
    #[arg(long)]
    k: u32,
    /// Newcomers repaired together.
    #[arg(long)]
    t: u32,
    /// Total node count; defaults to d + t.
    #[arg(long)]
    n: Option<u32>,
    /// Object size, integer or p/q.
    #[arg(long = "B", default_value = "1", value_parser = parse_rational)]
    object_size: Rational,
}

#[derive(Args, Debug, Clone)]
struct AdversaryArgs {
    #[arg(long, value_enum)]
    adversary: Option<AdversaryArg>,
    /// Adversaries among the live nodes each newcomer contacts.
    #[arg(long = "L0", default_value_t = 0)]
    l0: u32,
    /// Cap on adversaries per newcomer group.
    #[arg(long = "lmax", default_value_t = 1)]
    lmax: u32,
    /// Adversarial newcomers placed over all groups.
    #[arg(long = "Ltotal", default_value_t = 0)]
    ltotal: u32,
    /// Fix the data collector partition to this many groups.
    #[arg(long = "fixed-g")]
    fixed_g: Option<u32>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_enum, default_value = "msr")]
    point: PointArg,
    #[command(flatten)]
    adversary: AdversaryArgs,
    /// Unnormalized values instead of multiples of B/k.
    #[arg(long)]
    raw: bool,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    adversary: AdversaryArgs,
    /// Grid size.
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Smallest storage on the grid, in units of B/k.
    #[arg(long = "alpha-min", default_value_t = 1.0)]
    alpha_min: f64,
    /// Largest storage on the grid, in units of B/k; defaults to the MBR storage.
    #[arg(long = "alpha-max")]
    alpha_max: Option<f64>,
    /// Relative optimization tolerance.
    #[arg(long, default_value_t = crgc_core::tradeoff::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Write CSV here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// Seed for the random object.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON scenario config.
    #[arg(short, long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| format!("{s:?} is not an integer or p/q: {e}"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<TradeoffError>() {
            if matches!(
                e,
                TradeoffError::Infeasible(_)
                    | TradeoffError::Capacity(CapacityError::Infeasible(_) | CapacityError::InfeasibleAllocation { .. })
            ) {
                return 2;
            }
        }
        if let Some(CapacityError::Infeasible(_) | CapacityError::InfeasibleAllocation { .. }) =
            cause.downcast_ref::<CapacityError>()
        {
            return 2;
        }
        if let Some(ScenarioError::Repair { .. }) = cause.downcast_ref::<ScenarioError>() {
            return 3;
        }
        if let Some(ExactCodeError::RepairFailure(_)) = cause.downcast_ref::<ExactCodeError>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match cli.command {
        Command::Bounds(a) => commands::bounds(&a),
        Command::Tradeoff(a) => commands::tradeoff(&a),
        Command::ExactDemo(a) => commands::exact_demo(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Tables => commands::tables(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
