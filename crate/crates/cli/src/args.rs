use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "boxball",
    version,
    about = "Box-ball system simulator, soliton analysis and tagged-soliton experiments",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Write JSON instead of plain text to stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for ensembles (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// File of key=value lines supplying defaults for the flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the dynamics on a configuration.
    Evolve(EvolveArgs),
    /// List the solitons of a configuration.
    Identify(InputArgs),
    /// Seat labels and slot contents of a configuration.
    Linearize(InputArgs),
    /// Apply the k-skip map.
    Skip(SkipArgs),
    /// Per-size scalars of a q-sequence: velocities, variances, CGFs.
    Qstat(QstatArgs),
    /// Sample a configuration from the q-statistics.
    Sample(SampleArgs),
    /// Mean velocity of a tagged soliton.
    Velocity(EnsembleArgs),
    /// Variance per step of a tagged soliton.
    Diffusion(EnsembleArgs),
    /// Scaled cumulant generating function of a tagged soliton.
    Ldp(LdpArgs),
    /// Gap between two tagged solitons in diffusive scaling.
    Correlate(CorrelateArgs),
    /// Check the exact identities on sampled configurations.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Configuration file in the `@origin 0101...` format; `-` for stdin.
    #[arg(long = "in", value_name = "PATH", default_value = "-")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of steps.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Run the inverse dynamics instead.
    #[arg(long)]
    pub inverse: bool,
    /// Print every intermediate configuration, not only the last.
    #[arg(long)]
    pub all: bool,
    /// Also print the carrier load W(x) of the input.
    #[arg(long)]
    pub carrier: bool,
}

#[derive(Debug, Args)]
pub struct SkipArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Seat levels to delete.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Recenter the image so its origin is record 0.
    #[arg(long)]
    pub recenter: bool,
}

/// Choice of q-sequence.
#[derive(Debug, Args, Clone)]
#[group(id = "qclass", required = true, multiple = false)]
pub struct QArgs {
    /// Bernoulli product measure with density RHO < 1/2.
    #[arg(long, value_name = "RHO", group = "qclass")]
    pub bernoulli: Option<String>,
    /// Two-sided Markov measure with parameters A and B.
    #[arg(long, num_args = 2, value_names = ["A", "B"], group = "qclass")]
    pub markov: Option<Vec<String>>,
    /// Finite q-sequence, comma-separated (e.g. 1/5,1/10).
    #[arg(long, value_name = "LIST", value_delimiter = ',', group = "qclass")]
    pub q: Option<Vec<String>>,
}

#[derive(Debug, Args, Clone)]
pub struct QCut {
    /// Keep only q_1, ..., q_K of the sequence.
    #[arg(long, value_name = "K")]
    pub cut: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QstatArgs {
    #[command(flatten)]
    pub q: QArgs,
    #[command(flatten)]
    pub cut: QCut,
    /// Largest soliton size to report.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Evaluate the CGFs of size k at these points.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
    /// Evaluate the rate function of size k at these speeds.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub rate: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    SlotReconstruction,
    MarkovDirect,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Random seed.
    #[arg(long, env = "BOXBALL_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Sampler.
    #[arg(long, value_enum, default_value = "slot-reconstruction")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub q: QArgs,
    #[command(flatten)]
    pub cut: QCut,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Excursions right of the origin.
    #[arg(long, default_value_t = 100)]
    pub records: usize,
    /// Excursions left of the origin.
    #[arg(long, default_value_t = 0)]
    pub left: usize,
    /// Replica number within the seed.
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
    /// Sample the unconditioned law instead of the one with a record at 0.
    #[arg(long)]
    pub unconditioned: bool,
    /// Write the configuration here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Also write the JSON report here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the series as CSV here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub q: QArgs,
    #[command(flatten)]
    pub cut: QCut,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Soliton size.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Steps of dynamics.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Ensemble size.
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    /// Volume index of the tagged soliton.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub tag: i64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Points of the CGF grid.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.05,0,0.05")]
    pub lambda: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub q: QArgs,
    #[command(flatten)]
    pub cut: QCut,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Soliton size.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Scales n; each runs n^2 steps.
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "10,20,40")]
    pub sizes: Vec<usize>,
    /// Exponent a of the tag spacing n^a.
    #[arg(long, default_value_t = 1.0)]
    pub exponent: f64,
    /// First tag is floor(n^a u).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u: f64,
    /// Second tag is floor(n^a v).
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub v: f64,
    /// Ensemble size.
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    /// Largest acceptable final gap.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub q: QArgs,
    #[command(flatten)]
    pub cut: QCut,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Number of sampled configurations.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Steps of dynamics per sample.
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    /// Smallest window per sample, in sites.
    #[arg(long, default_value_t = 2000)]
    pub sites: usize,
    /// Where to write counterexamples when an identity fails.
    #[arg(long, value_name = "PATH", default_value = "boxball-counterexample.json")]
    pub counterexample: PathBuf,
    #[command(flatten)]
    pub report: ReportArgs,
}
