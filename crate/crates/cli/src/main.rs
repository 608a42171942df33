//! `cohtherm`: steady states, currents, regime diagrams and collision runs
//! for the two-bath qubit machine.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cohtherm_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "cohtherm",
    version,
    about = "Qubit thermal machine with coherent ancilla baths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic and numeric steady states and the effective coherence.
    SteadyState(Common),
    /// Heat currents, power and regime at the steady state.
    Currents(Common),
    /// Regime diagram over two swept parameters plus boundary overlays.
    Diagram(DiagramArgs),
    /// Efficiency and power output along one swept parameter.
    Curve(CurveArgs),
    /// Discrete collision trajectory.
    Collide(CollideArgs),
    /// Finite-collision rates at the steady state, extrapolated to zero collision time.
    Rates(RatesArgs),
    /// Seeded invariant suite; exits 1 on any violation.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Coherence in the cold bath 1.
    ColdCoherent,
    /// Coherence in the hot bath 1.
    HotCoherent,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Parameter file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in parameter set used when no config file is given.
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// Override one parameter, e.g. `--set bath1.epsilon=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Relative current tolerance for regime classification (verify: threshold scale).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub common: Common,
    /// Swept axis `key:min:max:steps`; give exactly two.
    #[arg(long, required = true, num_args = 1)]
    pub grid: Vec<String>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Swept axis `key:min:max:steps` (default bath2.B:0.93:1.2:271).
    #[arg(long)]
    pub grid: Option<String>,
    /// Comma-separated bath-1 coherence amplitudes, one curve each.
    #[arg(long, default_value = "0,0.1")]
    pub epsilons: String,
}

#[derive(Args, Debug)]
pub struct CollideArgs {
    #[command(flatten)]
    pub common: Common,
    /// Collision time.
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
    /// Number of collisions.
    #[arg(long, default_value_t = 1000)]
    pub collisions: usize,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated geometric ladder of collision times.
    #[arg(long = "tau-ladder")]
    pub tau_ladder: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated geometric ladder of collision times.
    #[arg(long = "tau-ladder")]
    pub tau_ladder: Option<String>,
    /// Draws per fuzz check instead of the per-check defaults.
    #[arg(long)]
    pub draws: Option<usize>,
}

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cohtherm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
