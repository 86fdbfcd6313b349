//! Command-line grammar. Every option is optional here; defaults are filled
//! in after merging with the `--config` file so that the resolved values can
//! be written back into the report.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fw-srde", version, about = "Large deviations of stochastic reaction-diffusion equations driven by space-time white noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the stochastic equation, one trajectory or an ensemble of final profiles
    Simulate(SimulateArgs),
    /// Solve the controlled skeleton equation
    Skeleton(SkeletonArgs),
    /// Minimize the control energy under an endpoint constraint
    Rate(RateArgs),
    /// Monte Carlo check of the large-deviation rate, or one of the claims c1 and c2
    VerifyLdp(VerifyLdpArgs),
    /// Randomized certification of the kernel, hypothesis and Gronwall inequalities
    CheckLemmas(CheckLemmasArgs),
    /// Growth of windowed suprema of the stochastic heat equation
    DemoExplosion(DemoExplosionArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Skeleton(_) => "skeleton",
            Command::Rate(_) => "rate",
            Command::VerifyLdp(_) => "verify-ldp",
            Command::CheckLemmas(_) => "check-lemmas",
            Command::DemoExplosion(_) => "demo-explosion",
        }
    }
}

/// Flags shared by all subcommands that are not part of the experiment itself.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Io {
    /// TOML file of option values; flags given on the command line win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Report path: `.json` (plus one CSV per table) or `.csv`; standard output when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    C1,
    C2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    HeatKernel,
    Hypotheses,
    Gronwall,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    /// Built-in coefficient set
    #[arg(long)]
    pub coeff: Option<String>,
    /// Noise intensity
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Grid as T,nt,L,nx
    #[arg(long)]
    pub grid: Option<String>,
    /// Number of independent trajectories
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise stream of the first trajectory; trajectory i uses stream + i
    #[arg(long)]
    pub streams: Option<u64>,
    /// Initial profile: zero, bump or gaussian
    #[arg(long)]
    pub u0: Option<String>,
    /// Optional control: built-in name or CSV file
    #[arg(long)]
    pub control: Option<String>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SkeletonArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long)]
    pub coeff: Option<String>,
    /// Built-in control name or CSV file with columns t_index, x_index, value
    #[arg(long)]
    pub control: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    /// Plain Picard iteration (h0) or the mollified schedule (h1); defaults to the set's regime
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long)]
    pub u0: Option<String>,
    /// Picard tolerance in the time-weighted sup norm
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Mollification levels for h1, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n_schedule: Option<Vec<u32>>,
    /// Required final gap of the mollified schedule
    #[arg(long)]
    pub gap_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long)]
    pub coeff: Option<String>,
    /// Target level a of u(T, x0)
    #[arg(long, allow_negative_numbers = true)]
    pub target: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Horizon; overrides the horizon of --grid
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub u0: Option<String>,
    /// Penalty weight of the first round
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Extra random starts
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub constraint_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyLdpArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long)]
    pub coeff: Option<String>,
    /// Event {u(T, x0) > a} as a,x0,T
    #[arg(long, allow_hyphen_values = true)]
    pub event: Option<String>,
    /// Noise levels, comma separated
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub u0: Option<String>,
    /// Run claim c1 (oscillating controls) or c2 (vanishing noise) instead of the rate check
    #[arg(long, value_enum)]
    pub claim: Option<Claim>,
    /// Base control of the claims
    #[arg(long)]
    pub control: Option<String>,
    /// Frequencies for c1, comma separated
    #[arg(long, value_delimiter = ',')]
    pub m_list: Option<Vec<u32>>,
    /// Amplitude of the c1 perturbation
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Exceedance threshold for c2
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CheckLemmasArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Samples per inequality (configurations for gronwall)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coefficient set for the hypotheses suite
    #[arg(long)]
    pub coeff: Option<String>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DemoExplosionArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Window half-widths, comma separated
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}
