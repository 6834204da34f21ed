//! `ncsim` — batch experiment runner for network-coded dissemination
//! simulations over lossy broadcast channels.

mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ncsim",
    version,
    about = "Monte-Carlo stopping-time experiments for network-coded all-to-all \
             dissemination over lossy broadcast wireless networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Sweep the network size: one experiment per entry of --sizes
    SweepN(SweepNArgs),
    /// Sweep the transmission power at fixed network size
    SweepPower(SweepPowerArgs),
    /// Run both protocols per size and report the baseline/NC mean ratio
    Compare(CompareArgs),
    /// Evaluate the analytic stopping-time bound without simulating
    Bound(BoundArgs),
    /// Run a single configuration
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Line,
    Grid,
    File,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Nc,
    Baseline,
    Both,
}

/// Flags shared by every subcommand; values fall back to --config fields,
/// then to built-in defaults (flags win).
#[derive(Args)]
pub struct CommonArgs {
    /// JSON experiment spec; any field can be overridden by a flag
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (fallback order: this flag, config file, NCSIM_SEED, 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per configuration
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Topology kind
    #[arg(long, value_enum)]
    pub topology: Option<TopologyArg>,
    /// Neighbor spacing in meters
    #[arg(long)]
    pub d: Option<f64>,
    /// Positions CSV (`node_id,x,y`) for --topology file
    #[arg(long, value_name = "PATH")]
    pub positions: Option<PathBuf>,
    /// Grid columns; sizes must divide evenly (default: square grids)
    #[arg(long)]
    pub grid_cols: Option<usize>,
    /// Transmit power in dBm (comma-separated list for sweep-power)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub power_dbm: Option<Vec<f64>>,
    /// Transmit power in watts (comma-separated list for sweep-power)
    #[arg(long, value_delimiter = ',', conflicts_with = "power_dbm")]
    pub power_w: Option<Vec<f64>>,
    /// Noise power in watts
    #[arg(long)]
    pub noise: Option<f64>,
    /// Capture threshold in dB
    #[arg(long)]
    pub z_db: Option<f64>,
    /// Path-loss exponent
    #[arg(long)]
    pub eta: Option<f64>,
    /// Field width in bits (1, 4, 8 or 16)
    #[arg(long)]
    pub q: Option<u8>,
    /// Payload symbols per packet
    #[arg(long)]
    pub r: Option<usize>,
    /// Protocol(s) to simulate
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
}

#[derive(Args)]
pub struct SweepNArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network sizes, e.g. 23,27,30,35
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Args)]
pub struct SweepPowerArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network size
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network sizes, e.g. 23,27,30,35
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network size
    #[arg(long)]
    pub n: Option<usize>,
    /// Dump the exact per-stage collision bounds to stderr
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network size
    #[arg(long)]
    pub n: Option<usize>,
    /// Write per-trial dimension traces to a sidecar CSV (requires --out)
    #[arg(long)]
    pub trace: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::execute(cli.command) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{} configuration(s) failed:", failures.len());
            for failure in failures {
                eprintln!("  {failure}");
            }
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
