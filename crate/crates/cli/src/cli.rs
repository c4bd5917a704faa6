use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thinfilm::verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "thinfilm", version, about = "Radial steady states of the van der Waals thin-film equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot the smooth profile with h(0) = eta.
    Smooth(SmoothArgs),
    /// Build the rupture profile with h(0) = 0 and continue it outward.
    Rupture(RuptureArgs),
    /// Neumann problem on a ball at prescribed pressure or average thickness.
    Bvp(BvpArgs),
    /// Run invariant suites and report pass/fail per check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Disjoining-pressure exponent, > 1.
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Space dimension N >= 2.
    #[arg(long, default_value_t = 2)]
    pub dim: u32,
    /// Pressure p > 0; defaults to 1/alpha.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-11)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-13)]
    pub abs_tol: f64,
    /// Relative tolerance for locating critical points.
    #[arg(long, default_value_t = 1e-12)]
    pub event_tol: f64,
    /// Test hook: integrate with f + offset.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub f_offset: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "THINFILM_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Central height h(0).
    #[arg(long)]
    pub eta: f64,
    /// Stop after this many critical points (10 when no --r-max is given).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct RuptureArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Stop after this many critical points (10 when no --r-max is given).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BvpMode {
    Pressure,
    Volume,
}

#[derive(Debug, Args)]
pub struct BvpArgs {
    #[arg(long, value_enum)]
    pub mode: BvpMode,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ball radius (pressure mode).
    #[arg(long, required_if_eq("mode", "pressure"))]
    pub radius: Option<f64>,
    /// Target average thickness on the unit ball (volume mode).
    #[arg(long, required_if_eq("mode", "volume"))]
    pub hbar: Option<f64>,
    /// Largest solution index considered.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Lower end of the eta grid, in units of xi.
    #[arg(long, default_value_t = 0.02)]
    pub eta_min: f64,
    /// Upper end of the eta grid, in units of xi.
    #[arg(long, default_value_t = 50.0)]
    pub eta_max: f64,
    /// Grid points below and above xi.
    #[arg(long, num_args = 2, value_names = ["BELOW", "ABOVE"], default_values_t = [40, 80])]
    pub eta_points: Vec<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Suites to run (comma separated); all when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_suite)]
    pub suite: Vec<Suite>,
    /// Seed for the randomized scaling samples.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite '{s}' (expected one of {})", names.join(", "))
    })
}
