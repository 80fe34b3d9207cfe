//! `minechain`: batch front end over the mining-game analyses.

mod commands;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use minechain::closedform::default_truncation;
use minechain::policy::UNBOUNDED_PROFILE_DEPTH;
use minechain::{
    make_constant_gap, make_frontier, make_slow_mixing, CapitulationPolicy, Depth, Player,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "MINECHAIN_THREADS";

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "minechain",
    version,
    about = "Mining-game Markov chain analyses"
)]
pub struct Cli {
    /// Write the primary output here; the manifest goes to `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Do not print the manifest to stderr when writing to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Stationary payoffs of a policy pair (JSON or one CSV row).
    Analyze(AnalyzeArgs),
    /// Mixing-time bounds, power thresholds, or exact mixing times (CSV).
    Mix(MixArgs),
    /// Safety labels for constant-gap policies at depth d (CSV).
    Safety(SafetyArgs),
    /// Closed-form market-share and revenue curves (CSV).
    Curve(CurveArgs),
    /// Monte Carlo run or hitting-time replications (JSON).
    Simulate(SimulateArgs),
    /// Exact lattice path counts (JSON).
    Paths(PathsArgs),
    /// Dump the induced chain as JSON or DOT.
    Chain(ChainArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PolicyArgs {
    /// Both players play Frontier.
    #[arg(long, conflicts_with_all = ["gap", "slow_mixing", "policy"])]
    pub frontier_vs_frontier: bool,
    /// Player 1 capitulates when behind by this many blocks.
    #[arg(long, conflicts_with_all = ["slow_mixing", "policy"])]
    pub gap: Option<u32>,
    /// Restart depth for --gap.
    #[arg(long, default_value_t = 0)]
    pub s: u32,
    /// Player 1 plays the slow-mixing policy of this depth.
    #[arg(long, conflicts_with = "policy")]
    pub slow_mixing: Option<u32>,
    /// Player-1 policy as JSON.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Player-2 policy as JSON (default: Frontier).
    #[arg(long)]
    pub opponent: Option<PathBuf>,
}

pub struct Resolved {
    pub policies: [CapitulationPolicy; 2],
    pub default_depth: u32,
}

fn read_policy(path: &PathBuf) -> Result<CapitulationPolicy, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("bad policy in {}: {e}", path.display())))
}

impl PolicyArgs {
    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let frontier2 = make_frontier(Depth::Unbounded, Player::Two);
        let (p1, depth) = if self.frontier_vs_frontier {
            (
                make_frontier(Depth::Unbounded, Player::One),
                UNBOUNDED_PROFILE_DEPTH,
            )
        } else if let Some(g) = self.gap {
            (
                make_constant_gap(g, self.s, Depth::Unbounded)?,
                default_truncation(g),
            )
        } else if let Some(d) = self.slow_mixing {
            (make_slow_mixing(d)?, d)
        } else if let Some(path) = &self.policy {
            let p = read_policy(path)?;
            let d = p.depth().bounded().unwrap_or(UNBOUNDED_PROFILE_DEPTH);
            (p, d)
        } else {
            return Err(Failure::Usage(
                "choose a strategy: --frontier-vs-frontier, --gap, --slow-mixing or --policy"
                    .into(),
            ));
        };
        let p2 = match &self.opponent {
            Some(path) => read_policy(path)?,
            None => frontier2,
        };
        Ok(Resolved {
            policies: [p1, p2],
            default_depth: depth,
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CostArgs {
    /// Cost per minute per unit of power: c_i = rate * p_i.
    #[arg(long, default_value_t = minechain::payoff::DEFAULT_COST_RATE)]
    pub cost_rate: f64,
    /// Fixed cost rate for player 1 (with --c2, overrides --cost-rate).
    #[arg(long, requires = "c2")]
    pub c1: Option<f64>,
    #[arg(long, requires = "c1")]
    pub c2: Option<f64>,
    /// Target minutes per validated block.
    #[arg(long, default_value_t = minechain::payoff::DEFAULT_TARGET_MINUTES)]
    pub tau: f64,
}

impl CostArgs {
    pub fn model(&self) -> Result<minechain::CostModel, Failure> {
        let m = match (self.c1, self.c2) {
            (Some(c1), Some(c2)) => minechain::CostModel::Fixed { c1, c2 },
            _ => minechain::CostModel::Proportional {
                rate: self.cost_rate,
            },
        };
        let bad = |x: f64| !(x >= 0.0 && x.is_finite());
        let negative = match m {
            minechain::CostModel::Fixed { c1, c2 } => bad(c1) || bad(c2),
            minechain::CostModel::Proportional { rate } => bad(rate),
        };
        if negative || !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Failure::Usage(
                "costs must be nonnegative and --tau positive".into(),
            ));
        }
        Ok(m)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub p1: f64,
    /// Truncation depth (default: max(200, 20g) for --gap, 200 otherwise).
    #[arg(long)]
    pub depth: Option<u32>,
    #[command(flatten)]
    pub costs: CostArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

fn parse_eps(text: &str) -> Result<f64, String> {
    let x: f64 = text.parse().map_err(|_| format!("cannot parse '{text}'"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err("eps must lie in (0, 1)".into())
    }
}

fn parse_horizon(text: &str) -> Result<f64, String> {
    let x: f64 = text.parse().map_err(|_| format!("cannot parse '{text}'"))?;
    if x > 1.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("horizon must be a finite number above 1".into())
    }
}

#[derive(Args, Debug, Serialize)]
pub struct MixArgs {
    #[arg(long, default_value = "1e-3", value_parser = parse_eps)]
    pub eps: f64,
    /// Horizon in turns.
    #[arg(long = "T", default_value = "1e4", value_parser = parse_horizon)]
    pub horizon: f64,
    /// Maximal gap grid.
    #[arg(long, default_value = "1..10")]
    pub gbar: String,
    /// Power grid: tabulate the bound instead of the threshold power.
    #[arg(long)]
    pub p1: Option<String>,
    /// Exact mixing time of a policy pair at one power.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Step budget for the exact computation.
    #[arg(long, default_value = "1e8", value_parser = grid::count)]
    pub budget: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionArg {
    /// Unsafe when the expected-rounds upper bound is below T.
    Rounds,
    /// Unsafe when 2d times that bound is below T.
    Turns,
}

#[derive(Args, Debug, Serialize)]
pub struct SafetyArgs {
    #[arg(long, default_value_t = 100)]
    pub d: u32,
    #[arg(long = "T", default_value = "1e8", value_parser = parse_horizon)]
    pub horizon: f64,
    /// Gap grid (default 1..min(d,20)).
    #[arg(long)]
    pub g: Option<String>,
    /// Restart grid (default 0..g for each g).
    #[arg(long)]
    pub s: Option<String>,
    /// Power grid (default 0.01..0.99..0.01).
    #[arg(long)]
    pub p1: Option<String>,
    /// Largest safe restart per gap, for every grid power at most this.
    #[arg(long, conflicts_with_all = ["p1min", "onset"])]
    pub p1max: Option<f64>,
    /// Largest safe restart per gap, for every grid power at least this.
    #[arg(long, conflicts_with = "onset")]
    pub p1min: Option<f64>,
    /// Smallest unsafe gap for each restart and power.
    #[arg(long)]
    pub onset: bool,
    #[arg(long, value_enum, default_value = "rounds")]
    pub criterion: CriterionArg,
}

#[derive(Args, Debug, Serialize)]
pub struct CurveArgs {
    #[arg(long, default_value = "1..49..2")]
    pub g: String,
    #[arg(long, default_value = "0.005..0.995..0.005")]
    pub p1: String,
    #[command(flatten)]
    pub costs: CostArgs,
    /// Leave out the Frontier baseline rows.
    #[arg(long)]
    pub no_frontier: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, default_value = "1e6", value_parser = grid::count)]
    pub turns: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = minechain::sim::DEFAULT_BATCHES)]
    pub batches: usize,
    #[command(flatten)]
    pub costs: CostArgs,
    /// Draw exponential turn durations and report time-domain statistics.
    #[arg(long)]
    pub durations: bool,
    /// Target state `l1,l2` for first-passage recording.
    #[arg(long)]
    pub hit: Option<String>,
    /// Independent hitting replications (requires --hit).
    #[arg(long, requires = "hit")]
    pub reps: Option<usize>,
    /// Per-replication turn budget.
    #[arg(long, default_value = "1e7", value_parser = grid::count)]
    pub budget: u64,
    /// Stream the trajectory as CSV to this file.
    #[arg(long, conflicts_with = "reps")]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PathsArgs {
    /// Count band paths (0,0) -> (l, l+m) instead of round counts.
    #[arg(long, requires_all = ["l", "m"])]
    pub band: bool,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub g: u32,
    #[arg(long, required_unless_present = "band")]
    pub d: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub s: u32,
    /// Also run the dynamic-programming oracle and report agreement.
    #[arg(long)]
    pub check: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    Json,
    Dot,
}

#[derive(Args, Debug, Serialize)]
pub struct ChainArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: DumpFormat,
    /// Include the stationary distribution in the JSON dump.
    #[arg(long)]
    pub stationary: bool,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(minechain::Error),
    Io(std::io::Error),
}

impl From<minechain::Error> for Failure {
    fn from(e: minechain::Error) -> Self {
        use minechain::Error as E;
        match e {
            E::InvalidParameter(_) | E::RestartAboveGap { .. } | E::InvalidPolicies(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Compute(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = text
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
