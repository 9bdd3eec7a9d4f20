use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch {
            expected: a.data().len(),
            actual: b.data().len(),
        });
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let n = a.data().len() as f64;
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of a single-channel plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let m = k.len();
    let (oh, ow) = (h - m + 1, w - m + 1);
    let mut tmp = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            tmp[r * ow + c] = (0..m).map(|t| k[t] * plane[r * w + c + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..m).map(|t| k[t] * tmp[(r + t) * ow + c]).sum();
        }
    }
    out
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`, averaged over all fully
/// contained windows and channels.
pub fn ssim(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let (h, w, ch) = (a.height(), a.width(), a.channels());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let k = gaussian_window();
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..ch {
        let x: Vec<f64> = a.data().iter().skip(c).step_by(ch).copied().collect();
        let y: Vec<f64> = b.data().iter().skip(c).step_by(ch).copied().collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = filter_valid(&x, h, w, &k);
        let my = filter_valid(&y, h, w, &k);
        let sxx = filter_valid(&xx, h, w, &k);
        let syy = filter_valid(&yy, h, w, &k);
        let sxy = filter_valid(&xy, h, w, &k);
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured() -> Image {
        Image::from_fn(32, 40, |r, c| ((r * 37 + c * c * 3) % 256) as f64).unwrap()
    }

    #[test]
    fn identical_images() {
        let a = textured();
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        assert!((ssim(&a, &a, 255.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_psnr() {
        let a = textured();
        let b = a.with_data(a.data().iter().map(|v| v + 5.0).collect()).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 25.0);
        let p = psnr(&a, &b, 255.0).unwrap();
        assert!((p - 34.151).abs() < 1e-3, "{p}");
    }

    #[test]
    fn ssim_symmetric_and_bounded() {
        let a = textured();
        let b = Image::from_fn(32, 40, |r, c| ((r * 11 + c * 5) % 200) as f64).unwrap();
        let ab = ssim(&a, &b, 255.0).unwrap();
        let ba = ssim(&b, &a, 255.0).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((-1.0..1.0).contains(&ab));
    }

    #[test]
    fn shape_mismatch() {
        let a = textured();
        let b = Image::constant(32, 39, 0.0);
        assert!(psnr(&a, &b, 255.0).is_err());
        assert!(ssim(&a, &b, 255.0).is_err());
        let tiny = Image::constant(5, 5, 1.0);
        assert!(ssim(&tiny, &tiny, 255.0).is_err());
    }
}
