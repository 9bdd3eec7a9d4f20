//! Floating-point images and binary PGM (P5) I/O.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major image with channel-interleaved `f64` intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite intensity at index {pos}")));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    /// Single-channel image from row-major values.
    pub fn gray(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(height, width, 1, data)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Self::gray(height, width, vec![value; height * width]).expect("valid constant image")
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::gray(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Intensity vector of the pixel with linear index `p`.
    #[inline]
    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        self.pixel(row * self.width + col)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Copy of the `h x w` region with top-left corner at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Image> {
        if h == 0 || w == 0 || top + h > self.height || left + w > self.width {
            return Err(Error::invalid(format!(
                "crop {h}x{w}+{top}+{left} outside {}x{} image",
                self.height, self.width
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(h * w * c);
        for r in top..top + h {
            let start = (r * self.width + left) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Image::new(h, w, c, data)
    }

    /// Clamps every intensity into `[lo, hi]`.
    pub fn clamped(&self, lo: f64, hi: f64) -> Image {
        Image {
            data: self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
            ..self.clone()
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Result<Image> {
        Image::new(self.height, self.width, self.channels, data)
    }
}

/// A decoded PGM file: the image and its declared maximum value.
#[derive(Debug, Clone)]
pub struct Pgm {
    pub image: Image,
    pub maxval: u16,
}

fn read_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            r.read_until(b'\n', &mut skip)?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b as char);
    }
    if tok.is_empty() {
        return Err(Error::format("truncated PGM header"));
    }
    Ok(tok)
}

fn parse_header_num<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    let tok = read_token(r)?;
    tok.parse()
        .map_err(|_| Error::format(format!("bad PGM {what}: {tok:?}")))
}

/// Decodes a binary (P5) PGM with 8- or 16-bit samples.
pub fn decode_pgm<R: Read>(reader: R) -> Result<Pgm> {
    let mut r = BufReader::new(reader);
    let magic = read_token(&mut r)?;
    if magic != "P5" {
        return Err(Error::format(format!("expected P5 PGM, found {magic:?}")));
    }
    let width = parse_header_num(&mut r, "width")?;
    let height = parse_header_num(&mut r, "height")?;
    let maxval = parse_header_num(&mut r, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("PGM maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("PGM dimensions overflow"))?;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let mut raw = vec![0u8; n * bytes_per];
    r.read_exact(&mut raw)
        .map_err(|_| Error::format("truncated PGM raster"))?;
    let data = if bytes_per == 1 {
        raw.iter().map(|&b| b as f64).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    Ok(Pgm {
        image: Image::gray(height, width, data)?,
        maxval: maxval as u16,
    })
}

/// Encodes a single-channel image as P5, rounding and clamping to `[0, maxval]`.
pub fn encode_pgm<W: Write>(mut w: W, img: &Image, maxval: u16) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::invalid("PGM output requires a single-channel image"));
    }
    if maxval == 0 {
        return Err(Error::invalid("PGM maxval must be positive"));
    }
    write!(w, "P5\n{} {}\n{}\n", img.width(), img.height(), maxval)?;
    let peak = maxval as f64;
    let q = |v: f64| v.clamp(0.0, peak).round() as u16;
    if maxval < 256 {
        let bytes: Vec<u8> = img.data().iter().map(|&v| q(v) as u8).collect();
        w.write_all(&bytes)?;
    } else {
        let bytes: Vec<u8> = img
            .data()
            .iter()
            .flat_map(|&v| q(v).to_be_bytes())
            .collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    let file = std::fs::File::open(path)?;
    decode_pgm(file)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image, maxval: u16) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    encode_pgm(&mut w, img, maxval)?;
    w.flush()?;
    Ok(())
}
