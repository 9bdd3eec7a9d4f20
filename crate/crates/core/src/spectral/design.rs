//! Spectral graph wavelet filter bank: a cubic-spline band-pass kernel at
//! log-spaced scales plus a low-pass scaling kernel.

use serde::{Deserialize, Serialize};

use super::chebyshev::cheby_coefficients;
use crate::error::{Error, Result};

/// Ratio `lambda_max / lambda_min` used to place the scales.
pub const SPECTRUM_RATIO: f64 = 20.0;

/// Six scales give a frame-bound ratio `B/A` near 1.38.
pub const DEFAULT_SCALES: usize = 6;
pub const DEFAULT_DEGREE: usize = 30;

/// Band-pass kernel: `x^2` below 1, cubic spline on `[1, 2]`, `4 / x^2`
/// above 2.
pub fn band_kernel(x: f64) -> f64 {
    if x < 1.0 {
        x * x
    } else if x <= 2.0 {
        -5.0 + x * (11.0 + x * (-6.0 + x))
    } else {
        4.0 / (x * x)
    }
}

/// Maximum of [`band_kernel`], at the spline's stationary point `2 - 1/sqrt(3)`.
pub fn band_kernel_peak() -> f64 {
    band_kernel(2.0 - 1.0 / 3f64.sqrt())
}

/// Filter-bank parameters. Band 0 is the scaling (low-pass) band, bands
/// `1..=J` are wavelets from coarsest to finest scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDesign {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Wavelet scales, strictly decreasing.
    pub scales: Vec<f64>,
    /// Scaling kernel amplitude.
    pub gamma: f64,
    pub cheby_degree: usize,
}

impl WaveletDesign {
    pub fn new(lambda_max: f64, num_scales: usize, cheby_degree: usize) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::invalid(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if num_scales < 1 {
            return Err(Error::invalid("number of wavelet scales must be at least 1"));
        }
        if cheby_degree < 3 {
            return Err(Error::invalid(format!(
                "Chebyshev degree must be at least 3, got {cheby_degree}"
            )));
        }
        let lambda_min = lambda_max / SPECTRUM_RATIO;
        // g(t lambda) peaks between 1 and 2: coarsest scale puts the upper
        // transition at lambda_min, finest puts the lower one at lambda_max
        let (t_max, t_min) = (2.0 / lambda_min, 1.0 / lambda_max);
        let scales = if num_scales == 1 {
            vec![t_max]
        } else {
            let (a, b) = (t_max.ln(), t_min.ln());
            (0..num_scales)
                .map(|j| (a + (b - a) * j as f64 / (num_scales - 1) as f64).exp())
                .collect()
        };
        Ok(WaveletDesign {
            lambda_max,
            lambda_min,
            scales,
            gamma: band_kernel_peak(),
            cheby_degree,
        })
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn num_bands(&self) -> usize {
        self.scales.len() + 1
    }

    pub fn scaling_kernel(&self, lambda: f64) -> f64 {
        let x = lambda / (0.6 * self.lambda_min);
        self.gamma * (-(x * x * x * x)).exp()
    }

    /// Spectral response of `band` at eigenvalue `lambda`.
    pub fn response(&self, band: usize, lambda: f64) -> f64 {
        if band == 0 {
            self.scaling_kernel(lambda)
        } else {
            band_kernel(self.scales[band - 1] * lambda)
        }
    }

    /// `G(lambda) = h(lambda)^2 + sum_j g(t_j lambda)^2`.
    pub fn frame_function(&self, lambda: f64) -> f64 {
        (0..self.num_bands()).map(|b| self.response(b, lambda).powi(2)).sum()
    }

    /// Min and max of the frame function over the given eigenvalues.
    pub fn frame_bounds_at(&self, lambdas: impl IntoIterator<Item = f64>) -> (f64, f64) {
        lambdas
            .into_iter()
            .map(|l| self.frame_function(l))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)))
    }

    /// Frame bounds over a uniform grid of `points` samples of `[0, lambda_max]`.
    pub fn frame_bounds(&self, points: usize) -> (f64, f64) {
        let points = points.max(2);
        let step = self.lambda_max / (points - 1) as f64;
        self.frame_bounds_at((0..points).map(|i| i as f64 * step))
    }

    /// Chebyshev coefficients of every band at the design degree.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.coefficients_at(self.cheby_degree)
    }

    pub fn coefficients_at(&self, degree: usize) -> Vec<Vec<f64>> {
        (0..self.num_bands())
            .map(|b| cheby_coefficients(|x| self.response(b, x), degree, self.lambda_max))
            .collect()
    }

    pub fn with_degree(&self, cheby_degree: usize) -> Result<Self> {
        WaveletDesign::new(self.lambda_max, self.num_scales(), cheby_degree)
    }
}

pub fn design_wavelets(lambda_max: f64, num_scales: usize, cheby_degree: usize) -> Result<WaveletDesign> {
    WaveletDesign::new(lambda_max, num_scales, cheby_degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::chebyshev::truncation_error;

    #[test]
    fn kernel_knots() {
        assert_eq!(band_kernel(0.0), 0.0);
        assert_eq!(band_kernel(1.0), 1.0);
        assert_eq!(band_kernel(2.0), 1.0);
        // continuous first derivative at both knots
        let d = |x: f64| (band_kernel(x + 1e-7) - band_kernel(x - 1e-7)) / 2e-7;
        assert!((d(1.0) - 2.0).abs() < 1e-5);
        assert!((d(2.0) + 1.0).abs() < 1e-5);
    }

    #[test]
    fn peak_value() {
        let brute = (0..=100_000)
            .map(|i| band_kernel(1.0 + i as f64 / 100_000.0))
            .fold(0.0, f64::max);
        assert!((band_kernel_peak() - brute).abs() < 1e-9);
        assert!((band_kernel_peak() - 1.3849001794597505).abs() < 1e-12);
    }

    #[test]
    fn band_layout() {
        let d = design_wavelets(8.0, 4, 30).unwrap();
        assert_eq!(d.num_bands(), 5);
        assert!(d.scales.windows(2).all(|s| s[0] > s[1]));
        assert_eq!(d.response(1, 0.0), 0.0);
        assert!(d.response(0, 0.0) > 0.0);
        assert!((d.scales[0] - 2.0 * 20.0 / 8.0).abs() < 1e-12);
        assert!((d.scales[3] - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_designs() {
        assert!(design_wavelets(8.0, 0, 30).is_err());
        assert!(design_wavelets(8.0, 4, 2).is_err());
        assert!(design_wavelets(0.0, 4, 30).is_err());
        assert!(design_wavelets(f64::NAN, 4, 30).is_err());
    }

    #[test]
    fn six_scales_frame_ratio() {
        let d = design_wavelets(10.0, 6, 30).unwrap();
        let (a, b) = d.frame_bounds(100_001);
        assert!((a - 1.708).abs() < 5e-3, "A = {a}");
        assert!((b - 2.359).abs() < 5e-3, "B = {b}");
        assert!(b / a <= 2.35 / 1.71 * 1.2);
    }

    #[test]
    fn unscaled_kernel_chebyshev_error() {
        // [0, 4] covers both spline knots and the start of the tail
        let c = crate::spectral::chebyshev::cheby_coefficients(band_kernel, 50, 4.0);
        let err = truncation_error(band_kernel, &c, 4.0, 1000);
        assert!(err <= 1e-3 * band_kernel_peak(), "err = {err}");
    }
}
