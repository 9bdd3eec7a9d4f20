//! Chebyshev-approximated spectral graph wavelet analysis and
//! least-squares synthesis.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::chebyshev::cheby_product;
use super::design::WaveletDesign;
use super::laplacian::LaplacianOperator;
use crate::error::{Error, Result};

pub const INVERSE_TOLERANCE: f64 = 1e-6;
pub const INVERSE_MAX_ITERS: usize = 500;

/// Per-band coefficient planes, band-major: scaling band first, then
/// wavelets from coarsest to finest.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCoefficients {
    n: usize,
    data: Vec<f64>,
}

impl BandCoefficients {
    pub fn zeros(num_bands: usize, n: usize) -> Self {
        BandCoefficients {
            n,
            data: vec![0.0; num_bands * n],
        }
    }

    pub fn from_bands(bands: Vec<Vec<f64>>) -> Result<Self> {
        let n = bands.first().map_or(0, Vec::len);
        if let Some(b) = bands.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        Ok(BandCoefficients {
            n,
            data: bands.concat(),
        })
    }

    pub fn num_bands(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    pub fn band(&self, b: usize) -> &[f64] {
        &self.data[b * self.n..(b + 1) * self.n]
    }

    pub fn band_mut(&mut self, b: usize) -> &mut [f64] {
        &mut self.data[b * self.n..(b + 1) * self.n]
    }

    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1))
    }

    /// `||band_b||^2` for every band.
    pub fn energies(&self) -> Vec<f64> {
        self.bands().map(|b| b.iter().map(|v| v * v).sum()).collect()
    }

    /// Writes the planes as little-endian `f32` and a JSON header describing
    /// band order and scales.
    pub fn write_planes(
        &self,
        bin_path: impl AsRef<Path>,
        header_path: impl AsRef<Path>,
        design: &WaveletDesign,
        shape: Option<(usize, usize)>,
    ) -> Result<()> {
        let mut bin = std::io::BufWriter::new(std::fs::File::create(bin_path.as_ref())?);
        let bytes: Vec<u8> = self.data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
        bin.write_all(&bytes)?;
        bin.flush()?;

        #[derive(Serialize)]
        struct Header<'a> {
            format_version: u32,
            dtype: &'static str,
            endianness: &'static str,
            num_bands: usize,
            signal_len: usize,
            height: Option<usize>,
            width: Option<usize>,
            band_order: Vec<String>,
            scales: &'a [f64],
            lambda_max: f64,
            cheby_degree: usize,
            data_file: String,
        }
        let mut band_order = vec!["scaling".to_string()];
        band_order.extend((1..=design.num_scales()).map(|j| format!("wavelet_{j}")));
        let header = Header {
            format_version: 1,
            dtype: "f32",
            endianness: "little",
            num_bands: self.num_bands(),
            signal_len: self.n,
            height: shape.map(|s| s.0),
            width: shape.map(|s| s.1),
            band_order,
            scales: &design.scales,
            lambda_max: design.lambda_max,
            cheby_degree: design.cheby_degree,
            data_file: bin_path
                .as_ref()
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let json = serde_json::to_string_pretty(&header).map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(header_path, json + "\n")?;
        Ok(())
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies several Chebyshev expansions to one signal, sharing the basis
/// vectors `T_m(S) f`. Uses exactly `max degree` operator applications.
pub fn cheby_apply_many(l: &LaplacianOperator, lambda_max: f64, coeffs: &[Vec<f64>], f: &[f64]) -> Result<Vec<Vec<f64>>> {
    l.check_len(f.len())?;
    let n = f.len();
    let degree = coeffs.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut out: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|c| {
            let c0 = c.first().copied().unwrap_or(0.0);
            f.iter().map(|v| 0.5 * c0 * v).collect()
        })
        .collect();
    if degree <= 1 {
        return Ok(out);
    }
    let scale = 2.0 / lambda_max;
    let mut prev = f.to_vec();
    let mut cur = vec![0.0; n];
    l.shifted_apply(scale, f, &mut cur);
    let mut next = vec![0.0; n];
    for m in 1..degree {
        if m > 1 {
            l.chebyshev_step(scale, &cur, &prev, &mut next);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        for (band, c) in out.iter_mut().zip(coeffs) {
            if let Some(&cm) = c.get(m) {
                if cm != 0.0 {
                    axpy(cm, &cur, band);
                }
            }
        }
    }
    Ok(out)
}

/// Forward transform: every band of `design` applied to `f`.
pub fn sgw_forward(l: &LaplacianOperator, design: &WaveletDesign, f: &[f64]) -> Result<BandCoefficients> {
    let bands = cheby_apply_many(l, design.lambda_max, &design.coefficients(), f)?;
    BandCoefficients::from_bands(bands)
}

/// `sum_b p_b(L) c_b`, the adjoint of the forward transform.
pub fn sgw_adjoint(l: &LaplacianOperator, design: &WaveletDesign, coeffs: &BandCoefficients) -> Result<Vec<f64>> {
    let cs = design.coefficients();
    if coeffs.num_bands() != cs.len() {
        return Err(Error::DimensionMismatch {
            expected: cs.len(),
            actual: coeffs.num_bands(),
        });
    }
    l.check_len(coeffs.signal_len())?;
    let mut acc = vec![0.0; l.n()];
    for (b, c) in cs.iter().enumerate() {
        let band = coeffs.band(b);
        if band.iter().all(|&v| v == 0.0) {
            continue;
        }
        let y = cheby_apply_many(l, design.lambda_max, std::slice::from_ref(c), band)?;
        axpy(1.0, &y[0], &mut acc);
    }
    Ok(acc)
}

/// Result of least-squares synthesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub signal: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Least-squares inverse: solves `(sum_b p_b(L)^2) f = sum_b p_b(L) c_b` by
/// conjugate gradients. The normal operator is a single expansion of degree
/// `2M`, applied with one shared recurrence per iteration.
pub fn sgw_inverse(l: &LaplacianOperator, design: &WaveletDesign, coeffs: &BandCoefficients) -> Result<Reconstruction> {
    let rhs = sgw_adjoint(l, design, coeffs)?;
    let n = rhs.len();
    let rhs_norm = dot(&rhs, &rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(Reconstruction {
            signal: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let cs = design.coefficients();
    let mut normal = vec![0.0];
    for c in &cs {
        let sq = cheby_product(c, c);
        if normal.len() < sq.len() {
            normal.resize(sq.len(), 0.0);
        }
        axpy(1.0, &sq, &mut normal[..sq.len()]);
    }
    let normal = [normal];
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(cheby_apply_many(l, design.lambda_max, &normal, x)?.swap_remove(0))
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    let mut rel = rr.sqrt() / rhs_norm;
    while rel > INVERSE_TOLERANCE && iterations < INVERSE_MAX_ITERS {
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NumericalDomain(format!(
                "normal operator not positive definite (p'Ap = {pap:e})"
            )));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
        iterations += 1;
        rel = rr.sqrt() / rhs_norm;
    }
    let converged = rel <= INVERSE_TOLERANCE;
    if !converged {
        log::warn!("sgw_inverse: CG stopped after {iterations} iterations at relative residual {rel:.3e}");
    }
    Ok(Reconstruction {
        signal: x,
        iterations,
        relative_residual: rel,
        converged,
    })
}
