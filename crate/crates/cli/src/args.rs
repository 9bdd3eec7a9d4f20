use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nnk_image::lattice::{MAX_WINDOW, MIN_WINDOW};
use nnk_image::pipeline::{GraphMethod, SignalMode, ThresholdMode};
use nnk_image::spectral::{DEFAULT_DEGREE, DEFAULT_SCALES};

#[derive(Debug, Parser)]
#[command(name = "nnk-image", version, about = "NNK image graphs and graph wavelet filtering")]
pub struct Cli {
    /// Worker threads for the parallel loops; 0 uses all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an NNK or BF graph and write it with a stats sidecar.
    BuildGraph(BuildGraphArgs),
    /// Denoise with graph wavelets and write the result plus a JSON report.
    Denoise(DenoiseArgs),
    /// Per-band energy fractions against Chebyshev degree, as CSV.
    Compaction(CompactionArgs),
    /// Per-pixel construction timings, simplified vs exact NNK, as CSV.
    Bench(BenchArgs),
    /// Add seeded Gaussian noise to an image.
    AddNoise(AddNoiseArgs),
    /// Print statistics of a saved graph file as JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nnk,
    Bf,
}

impl From<MethodArg> for GraphMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nnk => GraphMethod::Nnk,
            MethodArg::Bf => GraphMethod::Bf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Soft,
    Hard,
}

impl From<ThresholdArg> for ThresholdMode {
    fn from(m: ThresholdArg) -> Self {
        match m {
            ThresholdArg::Soft => ThresholdMode::Soft,
            ThresholdArg::Hard => ThresholdMode::Hard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    Raw,
    MeanRemoved,
}

impl From<SignalArg> for SignalMode {
    fn from(m: SignalArg) -> Self {
        match m {
            SignalArg::Raw => SignalMode::Raw,
            SignalArg::MeanRemoved => SignalMode::MeanRemoved,
        }
    }
}

fn window_size(s: &str) -> Result<usize, String> {
    let w: usize = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if w.is_multiple_of(2) || !(MIN_WINDOW..=MAX_WINDOW).contains(&w) {
        return Err(format!("window must be odd and in {MIN_WINDOW}..={MAX_WINDOW}, got {w}"));
    }
    Ok(w)
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("must be finite and > 0, got {v}"));
    }
    Ok(v)
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_nan() || v < 0.0 {
        return Err(format!("must be >= 0, got {v}"));
    }
    Ok(v)
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("must be an integer >= 1, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Odd window size w.
    #[arg(long, default_value_t = 11, value_parser = window_size)]
    pub window: usize,
    /// Spatial kernel width in pixels [default: window / 4].
    #[arg(long, value_parser = positive)]
    pub sigma_d: Option<f64>,
    /// Intensity kernel width.
    #[arg(long, default_value_t = 30.0, value_parser = positive)]
    pub sigma_f: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WaveletArgs {
    /// Number of wavelet scales J.
    #[arg(long, default_value_t = DEFAULT_SCALES, value_parser = at_least_one)]
    pub scales: usize,
    /// Chebyshev degree M.
    #[arg(long, default_value_t = DEFAULT_DEGREE, value_parser = at_least_one)]
    pub degree: usize,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Binary CSR graph file.
    #[arg(long)]
    pub output: PathBuf,
    /// Stats sidecar [default: <output>.json].
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Nnk)]
    pub method: MethodArg,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy image, or a clean one when --noise-sigma is given.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report [default: <output>.json].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Clean image for PSNR/SSIM. Defaults to --input when noise is added here.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Add Gaussian noise of this standard deviation to --input first.
    #[arg(long, value_parser = non_negative)]
    pub noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Nnk)]
    pub method: MethodArg,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub wavelet: WaveletArgs,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Soft)]
    pub threshold: ThresholdArg,
    /// Threshold factor k in k * median(|c|) / 0.6745.
    #[arg(long, default_value_t = 3.0, value_parser = non_negative)]
    pub k: f64,
    /// Build the graph from a bilateral-filtered copy of the input.
    #[arg(long)]
    pub presmooth: bool,
}

#[derive(Debug, Args)]
pub struct CompactionArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// CSV output.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = DEFAULT_SCALES, value_parser = at_least_one)]
    pub scales: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50], value_parser = at_least_one)]
    pub degrees: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [MethodArg::Nnk, MethodArg::Bf])]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = SignalArg::Raw)]
    pub signal: SignalArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// CSV output.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7, 9, 11], value_parser = window_size)]
    pub windows: Vec<usize>,
    /// Side of the centered square crop.
    #[arg(long, default_value_t = 128, value_parser = at_least_one)]
    pub crop: usize,
    #[arg(long, default_value_t = 3, value_parser = at_least_one)]
    pub reps: usize,
    #[arg(long, default_value_t = 30.0, value_parser = positive)]
    pub sigma_f: f64,
}

#[derive(Debug, Args)]
pub struct AddNoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = non_negative)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
