//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qbd-manet", version, about = "Analytic and simulated delay/capacity for a cell-partitioned two-hop relay MANET")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the analytic model: throughput capacity and expected delay
    Analyze(CommonArgs),
    /// Run the slot-level simulator and summarize the replications
    Simulate(CommonArgs),
    /// Cross-validate the simulated delay against the analytic model
    Validate(CommonArgs),
    /// Parameter sweeps written as CSV campaigns
    Sweep(SweepArgs),
    /// Monte-Carlo oracles checked against the closed-form probabilities
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML)
    #[arg(long, short)]
    pub config: PathBuf,
    /// Overrides the seed from the scenario file
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Which sweep to run
    #[arg(long, value_enum)]
    pub campaign: Campaign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Campaign {
    /// Analytic delay across network sizes
    DelayVsN,
    /// Analytic vs simulated delay across system loads
    DelayVsLoad,
    /// Analytic delay across broadcast probabilities
    DelayVsQ,
    /// Throughput capacity across broadcast probabilities
    CapacityVsQ,
    /// Simulated throughput across offered loads, past the capacity point
    ThroughputPlateau,
}

impl Campaign {
    pub fn file_stem(self) -> &'static str {
        match self {
            Campaign::DelayVsN => "delay-vs-n",
            Campaign::DelayVsLoad => "delay-vs-load",
            Campaign::DelayVsQ => "delay-vs-q",
            Campaign::CapacityVsQ => "capacity-vs-q",
            Campaign::ThroughputPlateau => "throughput-plateau",
        }
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trials per Monte-Carlo estimate
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
}
