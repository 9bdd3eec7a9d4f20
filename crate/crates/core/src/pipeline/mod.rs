//! Experiments: noise injection, graph wavelet denoising, energy
//! compaction and image quality metrics.

pub mod compaction;
pub mod denoise;
pub mod metrics;
pub mod noise;
pub mod suite;

pub use compaction::{compaction_sweep, energy_compaction, Compaction, SignalMode};
pub use denoise::{build_graph, denoise_sgw, DenoiseConfig, DenoiseReport, GraphMethod, StageTimings, ThresholdMode, ThresholdRule};
pub use metrics::{mse, psnr, ssim};
pub use noise::{add_noise, NoiseSpec};
pub use suite::{csv_preamble, run_denoise_suite, suite_csv, suite_means, SuiteConfig, SuiteRow};
