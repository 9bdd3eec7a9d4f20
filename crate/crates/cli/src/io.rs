use std::fs;
use std::path::Path;

use nnk_image::{Error, Image, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a grayscale image and its maxval. PGM always; PNG with the `png`
/// feature.
pub fn load_image(path: &Path) -> Result<(Image, u16)> {
    if is_png(path) {
        return load_png(path);
    }
    let pgm = nnk_image::read_pgm(path)?;
    Ok((pgm.image, pgm.maxval))
}

pub fn save_image(path: &Path, img: &Image, maxval: u16) -> Result<()> {
    if is_png(path) {
        return save_png(path, img, maxval);
    }
    nnk_image::write_pgm(path, img, maxval)
}

#[cfg(feature = "png")]
fn load_png(path: &Path) -> Result<(Image, u16)> {
    use image::ColorType;

    let dynimg = image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let sixteen = matches!(
        dynimg.color(),
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16
    );
    if sixteen {
        let data = dynimg.into_luma16().into_raw().into_iter().map(f64::from).collect();
        Ok((Image::gray(h, w, data)?, u16::MAX))
    } else {
        let data = dynimg.into_luma8().into_raw().into_iter().map(f64::from).collect();
        Ok((Image::gray(h, w, data)?, 255))
    }
}

#[cfg(feature = "png")]
fn save_png(path: &Path, img: &Image, maxval: u16) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let peak = maxval as f64;
    let q = |v: f64| v.clamp(0.0, peak).round();
    let res = if maxval <= 255 {
        let raw = img.data().iter().map(|&v| q(v) as u8).collect();
        image::GrayImage::from_raw(w, h, raw).map(|b| b.save(path))
    } else {
        let raw: Vec<u16> = img.data().iter().map(|&v| q(v) as u16).collect();
        image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, raw).map(|b| b.save(path))
    };
    match res {
        Some(Ok(())) => Ok(()),
        Some(Err(e)) => Err(Error::Io(std::io::Error::other(e))),
        None => Err(Error::InvalidArgument("PNG output needs a single-channel image".into())),
    }
}

#[cfg(not(feature = "png"))]
fn load_png(path: &Path) -> Result<(Image, u16)> {
    Err(Error::InvalidArgument(format!(
        "{}: PNG input needs the `png` feature",
        path.display()
    )))
}

#[cfg(not(feature = "png"))]
fn save_png(path: &Path, _: &Image, _: u16) -> Result<()> {
    Err(Error::InvalidArgument(format!(
        "{}: PNG output needs the `png` feature",
        path.display()
    )))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// `<path>.json`, keeping the original extension.
pub fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
