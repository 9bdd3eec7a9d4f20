//! Per-pixel construction timings for the simplified and exact NNK
//! builders, and wall time of a forward wavelet pass.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::KernelParams;
use crate::lattice::WindowPlan;
use crate::nnk::build_nnk_directed;
use crate::oracle::build_exact_nnk_directed;
use crate::par::Execution;
use crate::pipeline::csv_preamble;
use crate::spectral::{sgw_forward, LaplacianOperator, WaveletDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildMethod {
    Simplified,
    Exact,
}

impl BuildMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BuildMethod::Simplified => "simplified",
            BuildMethod::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub windows: Vec<usize>,
    /// Side of the square crop taken from the image center.
    pub crop: usize,
    pub reps: usize,
    /// `sigma_f`; `sigma_d` follows the window as `w / 4`.
    pub sigma_f: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            windows: vec![3, 5, 7, 9, 11],
            crop: 128,
            reps: 3,
            sigma_f: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub window: usize,
    pub method: BuildMethod,
    pub mean_us_per_pixel: f64,
    pub std_us_per_pixel: f64,
    pub edges: usize,
}

/// Square crop of side `size` centered in `img`.
pub fn center_crop(img: &Image, size: usize) -> Result<Image> {
    if size == 0 || size > img.height() || size > img.width() {
        return Err(Error::invalid(format!(
            "crop {size}x{size} does not fit in {}x{} image",
            img.height(),
            img.width()
        )));
    }
    img.crop((img.height() - size) / 2, (img.width() - size) / 2, size, size)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Times both builders at every window size. Each repetition builds the
/// whole crop; rows report the per-pixel mean and standard deviation over
/// repetitions in microseconds.
pub fn bench_construction(img: &Image, cfg: &BenchConfig, exec: Execution) -> Result<Vec<BenchRow>> {
    if cfg.reps == 0 {
        return Err(Error::invalid("bench needs at least one repetition"));
    }
    let crop = center_crop(img, cfg.crop)?;
    let pixels = crop.num_pixels() as f64;
    let mut rows = Vec::new();
    for &w in &cfg.windows {
        let plan = WindowPlan::new(w)?;
        let p = KernelParams::new(w as f64 / 4.0, cfg.sigma_f)?;
        for method in [BuildMethod::Simplified, BuildMethod::Exact] {
            let mut samples = Vec::with_capacity(cfg.reps);
            let mut edges = 0;
            for _ in 0..cfg.reps {
                let t = Instant::now();
                let g = match method {
                    BuildMethod::Simplified => build_nnk_directed(&crop, &plan, &p, exec)?,
                    BuildMethod::Exact => build_exact_nnk_directed(&crop, &plan, &p, exec)?,
                };
                samples.push(t.elapsed().as_secs_f64() * 1e6 / pixels);
                edges = g.nnz();
            }
            let (mean, std) = mean_std(&samples);
            log::info!("w={w} {}: {mean:.2} us/pixel", method.as_str());
            rows.push(BenchRow {
                window: w,
                method,
                mean_us_per_pixel: mean,
                std_us_per_pixel: std,
                edges,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow], config: &impl Serialize) -> Result<String> {
    let mut s = csv_preamble(config)?;
    s.push_str("w,method,mean_us_per_pixel,std,edges\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.4},{:.4},{}",
            r.window,
            r.method.as_str(),
            r.mean_us_per_pixel,
            r.std_us_per_pixel,
            r.edges
        )
        .expect("write to String");
    }
    Ok(s)
}

/// Best-of-`reps` wall time of one forward transform, in milliseconds.
pub fn time_forward(l: &LaplacianOperator, design: &WaveletDesign, f: &[f64], reps: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        std::hint::black_box(sgw_forward(l, design, f)?);
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_must_fit() {
        let img = Image::constant(20, 30, 1.0);
        assert!(center_crop(&img, 21).is_err());
        let c = center_crop(&img, 20).unwrap();
        assert_eq!((c.height(), c.width()), (20, 20));
        let cfg = BenchConfig {
            crop: 64,
            ..BenchConfig::default()
        };
        assert!(matches!(
            bench_construction(&img, &cfg, Execution::Sequential),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn small_run_schema() {
        let img = Image::from_fn(24, 24, |r, c| ((r * 31 + c * 17) % 256) as f64).unwrap();
        let cfg = BenchConfig {
            windows: vec![3, 5],
            crop: 16,
            reps: 2,
            sigma_f: 30.0,
        };
        let rows = bench_construction(&img, &cfg, Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 4);
        let csv = bench_csv(&rows, &cfg).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# format_version=1 config={"));
        assert_eq!(lines[1], "w,method,mean_us_per_pixel,std,edges");
        assert_eq!(lines.len(), 6);
    }
}
