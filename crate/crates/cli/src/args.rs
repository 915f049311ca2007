use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "sqapprox", version, about = "Diophantine approximation by perfect squares")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Recorded in every output header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for grid evaluation; never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Exit with code 4 when an estimator raises a warning.
    #[arg(long, global = true, default_value_t = false)]
    pub strict: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// JSON object whose keys override the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// All (a, c) with |a²·x − c²| < ψ(h_a) at a point.
    Solutions(SolutionsArgs),
    /// Partial sums of the convergence series.
    Dichotomy(DichotomyArgs),
    /// Grid measure of one strip family in a ball, or of a height window.
    Measure(MeasureArgs),
    /// First and second moments over sieved families.
    Bc(BcArgs),
    /// Box-counting slope of a height window.
    Boxdim(BoxdimArgs),
    /// Fourier solve of the periodic wave equation.
    WaveSolve(WaveSolveArgs),
    /// Small-denominator scan.
    Scan(ScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solutions(_) => "solutions",
            Self::Dichotomy(_) => "dichotomy",
            Self::Measure(_) => "measure",
            Self::Bc(_) => "bc",
            Self::Boxdim(_) => "boxdim",
            Self::WaveSolve(_) => "wave-solve",
            Self::Scan(_) => "scan",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SolutionsArgs {
    /// Comma-separated coordinates in [0,1].
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// `pow:<v>` or `table:<path>`.
    #[arg(long)]
    pub psi: String,
    #[arg(long = "hmax")]
    pub h_max: u64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long = "H", default_value_t = 65536)]
    pub h_max: u64,
    /// Sum the Hausdorff series for this exponent instead.
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GridArgs {
    #[arg(long = "res", default_value_t = 1024)]
    pub resolution: u32,
    /// `row-exact`, `cell-center` or `subsample:<k>`.
    #[arg(long, default_value = "row-exact")]
    pub sample: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BallArgs {
    /// Comma-separated centre; defaults to the cube centre.
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MeasureArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Coefficient vector whose family σ_a is measured in the ball.
    #[arg(long, conflicts_with = "window", required_unless_present = "window")]
    pub a: Option<String>,
    /// Height window `lo:hi` whose union is measured in the region.
    #[arg(long)]
    pub window: Option<String>,
    /// `ball`, `cube` or `shaved` (uses --eps); window mode only.
    #[arg(long, default_value = "ball")]
    pub region: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BcArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long = "hmax")]
    pub h_max: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BoxdimArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Height window `lo:hi`.
    #[arg(long, default_value = "16:256")]
    pub window: String,
    /// Resolution ladder `lo:hi`, doubling from lo to hi.
    #[arg(long = "res", default_value = "64:4096")]
    pub resolutions: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PeriodArgs {
    /// Comma-separated spatial periods; `p/q` is exact.
    #[arg(long, conflicts_with = "deltas", required_unless_present = "deltas")]
    pub alphas: Option<String>,
    /// Comma-separated δ_i = β²/α_i²; `p/q` is exact.
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long, default_value = "1")]
    pub beta: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct WaveSolveArgs {
    /// Source coefficients as JSON lines `{"a":[..],"b":..,"re":..,"im":..}`.
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub periods: PeriodArgs,
    #[arg(long = "min-den", default_value_t = 1e-8)]
    pub min_denominator: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub periods: PeriodArgs,
    #[arg(long = "hmax")]
    pub h_max: u64,
    #[arg(long = "C")]
    pub c: f64,
    #[arg(long)]
    pub w: f64,
}
