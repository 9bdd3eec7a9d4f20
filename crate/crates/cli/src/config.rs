use std::path::PathBuf;

use nnk_image::pipeline::suite::CSV_FORMAT_VERSION;
use serde::Serialize;

/// Version of every JSON and CSV artifact the tool writes.
pub const FORMAT_VERSION: u32 = CSV_FORMAT_VERSION;

/// Resolved settings of one invocation, embedded in every artifact. Fields a
/// subcommand does not use stay out of the JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub tool_version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub degrees: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presmooth: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crop: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    pub threads: usize,
}

impl RunConfig {
    pub fn new(command: &'static str, threads: usize) -> Self {
        RunConfig {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            threads,
            ..RunConfig::default()
        }
    }
}
