use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use log::info;
use nnk_image::bench::{bench_construction, bench_csv, BenchConfig};
use nnk_image::kernel::build_bf_graph_with;
use nnk_image::nnk::build_nnk_directed;
use nnk_image::pipeline::{
    add_noise, build_graph, compaction_sweep, csv_preamble, denoise_sgw, psnr, DenoiseConfig, DenoiseReport,
    GraphMethod, NoiseSpec, SignalMode, ThresholdMode, ThresholdRule,
};
use nnk_image::spectral::{build_laplacian, design_wavelets, estimate_lambda_max};
use nnk_image::{
    graph_stats, precompute_window, Execution, GraphStats, KernelParams, Result, SparseGraph, SymmetrizeMode,
};
use serde::Serialize;

use crate::args::*;
use crate::config::{RunConfig, FORMAT_VERSION};
use crate::io::{load_image, save_image, sha256_file, sidecar, to_json, write_json};

/// Per-invocation settings shared by every subcommand.
pub struct Context {
    pub threads: usize,
    pub exec: Execution,
}

impl Context {
    fn config(&self, command: &'static str) -> RunConfig {
        RunConfig::new(command, self.threads)
    }
}

fn kernel_params(k: &KernelArgs) -> Result<KernelParams> {
    KernelParams::new(k.sigma_d.unwrap_or(k.window as f64 / 4.0), k.sigma_f)
}

fn record_kernel(cfg: &mut RunConfig, k: &KernelArgs, p: &KernelParams) {
    cfg.window = Some(k.window);
    cfg.sigma_d = Some(p.sigma_d());
    cfg.sigma_f = Some(p.sigma_f());
}

fn record_input(cfg: &mut RunConfig, input: &std::path::Path) -> Result<()> {
    cfg.input = Some(input.to_path_buf());
    cfg.input_sha256 = Some(sha256_file(input)?);
    Ok(())
}

#[derive(Serialize)]
struct GraphSidecar<'a> {
    format_version: u32,
    config: &'a RunConfig,
    height: usize,
    width: usize,
    method: GraphMethod,
    /// Row-wise NNK edges before symmetrization.
    #[serde(skip_serializing_if = "Option::is_none")]
    directed_rows_edges: Option<usize>,
    stats: GraphStats,
    /// Mean degree over pixels whose full window lies inside the image.
    interior_mean_degree: Option<f64>,
    build_ms: f64,
}

pub fn build_graph_cmd(a: &BuildGraphArgs, ctx: &Context) -> Result<()> {
    let p = kernel_params(&a.kernel)?;
    let mut cfg = ctx.config("build-graph");
    record_input(&mut cfg, &a.input)?;
    record_kernel(&mut cfg, &a.kernel, &p);
    cfg.output = Some(a.output.clone());
    cfg.methods = vec![GraphMethod::from(a.method).to_string()];

    let (img, _) = load_image(&a.input)?;
    let plan = precompute_window(a.kernel.window)?;
    let t = Instant::now();
    let (graph, directed) = match a.method {
        MethodArg::Nnk => {
            let d = build_nnk_directed(&img, &plan, &p, ctx.exec)?;
            let n = d.nnz();
            (d.symmetrize(SymmetrizeMode::Max), Some(n))
        }
        MethodArg::Bf => (build_bf_graph_with(&img, &plan, &p, ctx.exec)?, None),
    };
    let build_ms = t.elapsed().as_secs_f64() * 1e3;
    graph.save(&a.output)?;

    let side = GraphSidecar {
        format_version: FORMAT_VERSION,
        config: &cfg,
        height: img.height(),
        width: img.width(),
        method: a.method.into(),
        directed_rows_edges: directed,
        stats: graph_stats(&graph),
        interior_mean_degree: graph.interior_mean_degree(img.height(), img.width(), a.kernel.window / 2),
        build_ms,
    };
    let stats_path = a.stats.clone().unwrap_or_else(|| sidecar(&a.output));
    write_json(&stats_path, &side)?;
    info!(
        "{} graph: {} undirected edges in {build_ms:.1} ms",
        side.method, side.stats.undirected_edges
    );
    Ok(())
}

#[derive(Serialize)]
struct DenoiseArtifact<'a> {
    format_version: u32,
    config: &'a RunConfig,
    denoise: &'a DenoiseConfig,
    report: &'a DenoiseReport,
}

pub fn denoise_cmd(a: &DenoiseArgs, ctx: &Context) -> Result<()> {
    let p = kernel_params(&a.kernel)?;
    let rule = ThresholdRule::new(ThresholdMode::from(a.threshold), a.k)?;
    let mut cfg = ctx.config("denoise");
    record_input(&mut cfg, &a.input)?;
    record_kernel(&mut cfg, &a.kernel, &p);
    cfg.output = Some(a.output.clone());
    cfg.reference = a.reference.clone();
    cfg.methods = vec![GraphMethod::from(a.method).to_string()];
    cfg.scales = Some(a.wavelet.scales);
    cfg.degrees = vec![a.wavelet.degree];
    cfg.threshold = Some(format!("{:?}", a.threshold).to_lowercase());
    cfg.k = Some(a.k);
    cfg.presmooth = Some(a.presmooth);
    cfg.noise_sigma = a.noise_sigma;
    cfg.seed = a.noise_sigma.map(|_| a.seed);

    let (input, maxval) = load_image(&a.input)?;
    let reference = match &a.reference {
        Some(path) => Some(load_image(path)?.0),
        None if a.noise_sigma.is_some() => Some(input.clone()),
        None => None,
    };
    let noisy = match a.noise_sigma {
        Some(sigma) => add_noise(&input, &NoiseSpec::new(sigma, a.seed)?)?,
        None => input,
    };
    let dcfg = DenoiseConfig {
        kernel: p,
        num_scales: a.wavelet.scales,
        cheby_degree: a.wavelet.degree,
        rule,
        presmooth: a.presmooth,
        peak: maxval as f64,
        ..DenoiseConfig::new(a.method.into(), a.kernel.window)
    };
    let (out, report) = denoise_sgw(&noisy, &dcfg, reference.as_ref(), ctx.exec)?;
    save_image(&a.output, &out, maxval)?;
    let artifact = DenoiseArtifact {
        format_version: FORMAT_VERSION,
        config: &cfg,
        denoise: &dcfg,
        report: &report,
    };
    write_json(&a.report.clone().unwrap_or_else(|| sidecar(&a.output)), &artifact)?;
    if let (Some(out_db), Some(in_db)) = (report.psnr_db, report.input_psnr_db) {
        info!("PSNR {in_db:.2} dB -> {out_db:.2} dB");
    }
    Ok(())
}

pub fn compaction_cmd(a: &CompactionArgs, ctx: &Context) -> Result<()> {
    let p = kernel_params(&a.kernel)?;
    let mut cfg = ctx.config("compaction");
    record_input(&mut cfg, &a.input)?;
    record_kernel(&mut cfg, &a.kernel, &p);
    cfg.output = Some(a.output.clone());
    cfg.methods = a.methods.iter().map(|&m| GraphMethod::from(m).to_string()).collect();
    cfg.scales = Some(a.scales);
    cfg.degrees = a.degrees.clone();
    cfg.signal = Some(match SignalMode::from(a.signal) {
        SignalMode::Raw => "raw".into(),
        SignalMode::MeanRemoved => "mean-removed".into(),
    });

    let (img, _) = load_image(&a.input)?;
    let plan = precompute_window(a.kernel.window)?;
    let mut csv = csv_preamble(&cfg)?;
    csv.push_str("method,degree,band,fraction,cumulative\n");
    for &m in &a.methods {
        let method = GraphMethod::from(m);
        let g = build_graph(&img, &plan, &p, method, ctx.exec)?;
        let l = build_laplacian(&g)?.with_execution(ctx.exec);
        let max_degree = a.degrees.iter().copied().max().unwrap_or(1);
        let design = design_wavelets(estimate_lambda_max(&l), a.scales, max_degree)?;
        for (degree, c) in compaction_sweep(&img, &l, &design, a.signal.into(), &a.degrees)? {
            for (band, (f, cum)) in c.fractions.iter().zip(&c.cumulative).enumerate() {
                writeln!(csv, "{method},{degree},{band},{f},{cum}").expect("write to String");
            }
            info!("{method} M={degree}: low-band fraction {:.4}", c.low_band());
        }
    }
    fs::write(&a.output, csv)?;
    Ok(())
}

pub fn bench_cmd(a: &BenchArgs, ctx: &Context) -> Result<()> {
    let mut cfg = ctx.config("bench");
    record_input(&mut cfg, &a.input)?;
    cfg.output = Some(a.output.clone());
    cfg.windows = a.windows.clone();
    cfg.crop = Some(a.crop);
    cfg.reps = Some(a.reps);
    cfg.sigma_f = Some(a.sigma_f);
    cfg.methods = vec!["simplified".into(), "exact".into()];

    let (img, _) = load_image(&a.input)?;
    let bcfg = BenchConfig {
        windows: a.windows.clone(),
        crop: a.crop,
        reps: a.reps,
        sigma_f: a.sigma_f,
    };
    let rows = bench_construction(&img, &bcfg, ctx.exec)?;
    fs::write(&a.output, bench_csv(&rows, &cfg)?)?;
    Ok(())
}

#[derive(Serialize)]
struct NoiseSidecar<'a> {
    format_version: u32,
    config: &'a RunConfig,
    /// PSNR of the written (quantized) noisy image against the input.
    #[serde(serialize_with = "finite_or_inf")]
    psnr_db: f64,
}

fn finite_or_inf<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn add_noise_cmd(a: &AddNoiseArgs, ctx: &Context) -> Result<()> {
    let mut cfg = ctx.config("add-noise");
    record_input(&mut cfg, &a.input)?;
    cfg.output = Some(a.output.clone());
    cfg.noise_sigma = Some(a.sigma);
    cfg.seed = Some(a.seed);

    let (img, maxval) = load_image(&a.input)?;
    let noisy = add_noise(&img, &NoiseSpec::new(a.sigma, a.seed)?)?;
    save_image(&a.output, &noisy, maxval)?;
    let (written, _) = load_image(&a.output)?;
    let side = NoiseSidecar {
        format_version: FORMAT_VERSION,
        config: &cfg,
        psnr_db: psnr(&img, &written, maxval as f64)?,
    };
    write_json(&sidecar(&a.output), &side)?;
    Ok(())
}

#[derive(Serialize)]
struct StatsReport<'a> {
    format_version: u32,
    config: &'a RunConfig,
    symmetric: bool,
    stats: GraphStats,
}

pub fn stats_cmd(a: &StatsArgs, ctx: &Context) -> Result<()> {
    let mut cfg = ctx.config("stats");
    record_input(&mut cfg, &a.graph)?;
    cfg.output = a.output.clone();
    let g = SparseGraph::load(&a.graph)?;
    let report = StatsReport {
        format_version: FORMAT_VERSION,
        config: &cfg,
        symmetric: g.is_symmetric(),
        stats: graph_stats(&g),
    };
    match &a.output {
        Some(path) => write_json(path, &report),
        None => {
            print!("{}", to_json(&report)?);
            Ok(())
        }
    }
}
