use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "attrition", version, about = "Equilibria of the war of attrition with two-sided private values")]
pub struct Cli {
    /// Type distribution as JSON, or @path to a JSON file
    #[arg(long, global = true)]
    pub dist: Option<String>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Number of grid types
    #[arg(long, global = true, default_value_t = 512)]
    pub grid: usize,

    /// Probability mass cut from the top of the type distribution
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tail: f64,

    /// Reserved; nothing is random yet
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary limits of the hazard potential and the resulting case
    Classify,
    /// Tabulate one equilibrium of the family
    Solve(SolveArgs),
    /// Check that a tabulated equilibrium admits no profitable deviation
    Verify(VerifyArgs),
    /// Selection experiments in the perturbed games
    Refine(RefineArgs),
    /// Draw one of the three closed-form figures
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "anchor", required = true, multiple = false)]
pub struct AnchorArgs {
    /// Relative aggressiveness (exponential and uniform only)
    #[arg(long, group = "anchor")]
    pub gamma: Option<f64>,

    /// Integration constant of the type-to-type map
    #[arg(long, group = "anchor", allow_negative_numbers = true)]
    pub c: Option<f64>,

    /// Highest Player-1 type that concedes at zero
    #[arg(long, group = "anchor")]
    pub theta1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub anchor: AnchorArgs,

    /// Share of the loser's stopping time paid by the winner
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub solve: SolveArgs,

    /// Types checked per player
    #[arg(long, default_value_t = 50)]
    pub types: usize,

    /// Points in the deviation grid
    #[arg(long, default_value_t = 400)]
    pub deviations: usize,

    /// Doubles Player 1's stopping times before checking
    #[arg(long, hide = true)]
    pub tamper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Al,
    Bt,
}

#[derive(Debug, Clone, Args)]
pub struct RefineArgs {
    #[arg(long, value_enum, default_value_t = Mode::Al)]
    pub mode: Mode,

    /// Discount schedule (mode al)
    #[arg(long, value_delimiter = ',', conflicts_with = "epsilon")]
    pub delta: Vec<f64>,

    /// Behavioral-mass schedule (mode bt)
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,

    /// Candidate integration constants
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c: Vec<f64>,

    /// Candidate zero-conceding thresholds, converted to constants of the undiscounted game
    #[arg(long, value_delimiter = ',')]
    pub theta1: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// 1: exponential, 2: uniform, 3: Pareto
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub figure: u8,
}
