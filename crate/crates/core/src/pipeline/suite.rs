use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::denoise::{denoise_sgw, DenoiseConfig, GraphMethod};
use super::metrics::{psnr, ssim};
use super::noise::{add_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::bf_filter_with;
use crate::lattice::WindowPlan;
use crate::par::{self, Execution};

pub const CSV_FORMAT_VERSION: u32 = 1;

/// One line of suite output. `method` is `noisy`, `bf-filter`, `nnk` or `bf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub image: String,
    pub sigma: f64,
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub edges: usize,
    pub graph_ms: f64,
    pub forward_ms: f64,
    pub inverse_ms: f64,
    pub total_ms: f64,
}

/// Suite settings. `nnk` and `bf` share everything except the method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub denoise: DenoiseConfig,
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// Denoises every `(name, clean image)` at every noise level with the NNK
/// graph, the BF graph and the classical bilateral filter. Images run in
/// parallel; each image's stages run in order.
pub fn run_denoise_suite(images: &[(String, Image)], cfg: &SuiteConfig, exec: Execution) -> Result<Vec<SuiteRow>> {
    let plan = WindowPlan::new(cfg.denoise.window)?;
    let peak = cfg.denoise.peak;
    let per_image = par::map_range(exec, images.len(), |i| -> Result<Vec<SuiteRow>> {
        let (name, clean) = &images[i];
        let mut rows = Vec::new();
        for (s, &sigma) in cfg.sigmas.iter().enumerate() {
            let seed = cfg.seed.wrapping_add((i * cfg.sigmas.len() + s) as u64);
            let noisy = add_noise(clean, &NoiseSpec::new(sigma, seed)?)?;
            let row = |method: &str, img: &Image, edges, t: [f64; 4]| -> Result<SuiteRow> {
                Ok(SuiteRow {
                    image: name.clone(),
                    sigma,
                    method: method.to_string(),
                    psnr_db: psnr(clean, img, peak)?,
                    ssim: ssim(clean, img, peak)?,
                    edges,
                    graph_ms: t[0],
                    forward_ms: t[1],
                    inverse_ms: t[2],
                    total_ms: t[3],
                })
            };
            rows.push(row("noisy", &noisy.clamped(0.0, peak), 0, [0.0; 4])?);
            let t = Instant::now();
            let filtered = bf_filter_with(&noisy, &plan, &cfg.denoise.kernel, true, Execution::Sequential)?;
            let total = t.elapsed().as_secs_f64() * 1e3;
            rows.push(row("bf-filter", &filtered.clamped(0.0, peak), 0, [0.0, 0.0, 0.0, total])?);
            for method in [GraphMethod::Nnk, GraphMethod::Bf] {
                let dc = DenoiseConfig {
                    method,
                    ..cfg.denoise.clone()
                };
                let (out, rep) = denoise_sgw(&noisy, &dc, None, Execution::Sequential)?;
                let tm = rep.timings;
                rows.push(row(
                    method.as_str(),
                    &out,
                    rep.edges_undirected,
                    [tm.graph_ms, tm.forward_ms, tm.inverse_ms, tm.total_ms],
                )?);
            }
            log::info!("{name} sigma={sigma} done");
        }
        Ok(rows)
    });
    let mut out = Vec::new();
    for r in per_image {
        out.extend(r?);
    }
    Ok(out)
}

/// Mean PSNR and SSIM of `method` at noise level `sigma`.
pub fn suite_means(rows: &[SuiteRow], method: &str, sigma: f64) -> Option<(f64, f64)> {
    let sel: Vec<&SuiteRow> = rows.iter().filter(|r| r.method == method && r.sigma == sigma).collect();
    if sel.is_empty() {
        return None;
    }
    let n = sel.len() as f64;
    Some((
        sel.iter().map(|r| r.psnr_db).sum::<f64>() / n,
        sel.iter().map(|r| r.ssim).sum::<f64>() / n,
    ))
}

/// First line of every CSV artifact: format version and the run
/// configuration as JSON.
pub fn csv_preamble(config: &impl Serialize) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::format(e.to_string()))?;
    Ok(format!("# format_version={CSV_FORMAT_VERSION} config={json}\n"))
}

pub fn suite_csv(rows: &[SuiteRow], config: &impl Serialize) -> Result<String> {
    let mut s = csv_preamble(config)?;
    s.push_str("image,sigma,method,psnr_db,ssim,edges,graph_ms,forward_ms,inverse_ms,total_ms\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
            r.image,
            r.sigma,
            r.method,
            fmt_f(r.psnr_db),
            r.ssim,
            r.edges,
            r.graph_ms,
            r.forward_ms,
            r.inverse_ms,
            r.total_ms
        )
        .expect("write to String");
    }
    Ok(s)
}
