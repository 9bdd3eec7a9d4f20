use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::{sgw_forward, LaplacianOperator, WaveletDesign};

/// Which version of the image enters the transform.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalMode {
    #[default]
    Raw,
    MeanRemoved,
}

/// Per-band share of signal energy, `||band_b||^2 / ||f||^2`, in band order
/// (scaling first).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compaction {
    pub fractions: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub signal_energy: f64,
}

impl Compaction {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative fraction in the scaling band and the coarsest wavelet band.
    pub fn low_band(&self) -> f64 {
        self.cumulative[1.min(self.cumulative.len() - 1)]
    }
}

fn signal(img: &Image, mode: SignalMode) -> Result<Vec<f64>> {
    if img.channels() != 1 {
        return Err(Error::invalid("energy compaction needs a single-channel image"));
    }
    let mut f = img.data().to_vec();
    if mode == SignalMode::MeanRemoved {
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        f.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(f)
}

pub fn energy_compaction(
    img: &Image,
    l: &LaplacianOperator,
    design: &WaveletDesign,
    mode: SignalMode,
) -> Result<Compaction> {
    let f = signal(img, mode)?;
    let energy: f64 = f.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::NumericalDomain(
            "energy fractions are undefined for a zero-energy signal".into(),
        ));
    }
    let bands = sgw_forward(l, design, &f)?;
    let fractions: Vec<f64> = bands.energies().into_iter().map(|e| e / energy).collect();
    let cumulative = fractions
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    Ok(Compaction {
        fractions,
        cumulative,
        signal_energy: energy,
    })
}

/// [`energy_compaction`] at each Chebyshev degree in `degrees`.
pub fn compaction_sweep(
    img: &Image,
    l: &LaplacianOperator,
    design: &WaveletDesign,
    mode: SignalMode,
    degrees: &[usize],
) -> Result<Vec<(usize, Compaction)>> {
    degrees
        .iter()
        .map(|&m| Ok((m, energy_compaction(img, l, &design.with_degree(m)?, mode)?)))
        .collect()
}
