//! Single-channel image planes and binary PGM I/O.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::MB_SIZE;

/// Luma raster with dimensions padded to a multiple of the macroblock size.
///
/// Samples are kept as `f64` in raster order; rounding to 8 bits only happens
/// when writing a PGM.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    orig_width: usize,
    orig_height: usize,
    samples: Vec<f64>,
}

impl ImagePlane {
    /// Builds a plane whose dimensions already are multiples of 16.
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        Self::with_original(width, height, width, height, samples)
    }

    /// Builds a padded plane that remembers the pre-padding size.
    pub fn with_original(
        width: usize,
        height: usize,
        orig_width: usize,
        orig_height: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || width % MB_SIZE != 0 || height % MB_SIZE != 0 {
            return Err(Error::domain(format!(
                "plane dimensions {width}x{height} must be positive multiples of {MB_SIZE}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::domain(format!(
                "expected {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        if orig_width == 0
            || orig_height == 0
            || orig_width > width
            || orig_height > height
            || width - orig_width >= MB_SIZE
            || height - orig_height >= MB_SIZE
        {
            return Err(Error::domain(format!(
                "original size {orig_width}x{orig_height} inconsistent with padded {width}x{height}"
            )));
        }
        Ok(ImagePlane {
            width,
            height,
            orig_width,
            orig_height,
            samples,
        })
    }

    /// Pads an arbitrary raster to the next multiple of 16 by edge replication.
    pub fn from_unpadded(width: usize, height: usize, samples: &[f64]) -> Result<Self> {
        if width == 0 || height == 0 || samples.len() != width * height {
            return Err(Error::domain(format!(
                "raster of {} samples does not match {width}x{height}",
                samples.len()
            )));
        }
        let pw = width.div_ceil(MB_SIZE) * MB_SIZE;
        let ph = height.div_ceil(MB_SIZE) * MB_SIZE;
        let mut out = Vec::with_capacity(pw * ph);
        for y in 0..ph {
            let sy = y.min(height - 1);
            let row = &samples[sy * width..(sy + 1) * width];
            out.extend_from_slice(row);
            out.extend(std::iter::repeat_n(row[width - 1], pw - width));
        }
        Self::with_original(pw, ph, width, height, out)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn orig_width(&self) -> usize {
        self.orig_width
    }

    pub fn orig_height(&self) -> usize {
        self.orig_height
    }

    /// Number of pixels on the padded grid.
    pub fn n_pixels(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    /// Same padded geometry and original size.
    pub fn same_geometry(&self, other: &ImagePlane) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.orig_width == other.orig_width
            && self.orig_height == other.orig_height
    }

    /// Returns a plane with identical geometry and new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::with_original(
            self.width,
            self.height,
            self.orig_width,
            self.orig_height,
            samples,
        )
    }

    /// Pixel error `other - self` over the padded grid.
    pub fn error_to(&self, other: &ImagePlane) -> Result<PixelError> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::domain("error between planes of different size"));
        }
        Ok(PixelError::new(
            other
                .samples
                .iter()
                .zip(&self.samples)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Samples cropped to the original size and rounded to 8 bits.
    pub fn to_u8_cropped(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.orig_width * self.orig_height);
        for y in 0..self.orig_height {
            for x in 0..self.orig_width {
                out.push(self.get(x, y).round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }
}

/// Difference `x_hat - x` over a block or an image.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelError {
    values: Vec<f64>,
}

impl PixelError {
    pub fn new(values: Vec<f64>) -> Self {
        PixelError { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

fn is_pnm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
fn header_token(data: &[u8], pos: &mut usize) -> Result<u32> {
    loop {
        while *pos < data.len() && is_pnm_space(data[*pos]) {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < data.len() && data[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("malformed PGM header"));
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("PGM header value out of range"))
}

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_pgm_header(data: &[u8]) -> Result<PgmHeader> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::format("not a binary PGM (expected P5 magic)"));
    }
    let mut pos = 2;
    let width = header_token(data, &mut pos)? as usize;
    let height = header_token(data, &mut pos)? as usize;
    let maxval = header_token(data, &mut pos)?;
    if pos >= data.len() || !is_pnm_space(data[pos]) {
        return Err(Error::format("missing whitespace after PGM maxval"));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("PGM with zero dimension"));
    }
    Ok(PgmHeader {
        width,
        height,
        maxval,
        data_offset: pos + 1,
    })
}

/// Parses an 8-bit binary PGM and pads it to the macroblock grid.
pub fn decode_pgm(data: &[u8]) -> Result<ImagePlane> {
    let header = parse_pgm_header(data)?;
    if header.maxval != 255 {
        return Err(Error::format(format!(
            "unsupported PGM maxval {} (only 255)",
            header.maxval
        )));
    }
    let n = header.width * header.height;
    let payload = &data[header.data_offset..];
    if payload.len() < n {
        return Err(Error::format(format!(
            "truncated PGM payload: {} of {n} bytes",
            payload.len()
        )));
    }
    let samples: Vec<f64> = payload[..n].iter().map(|&b| f64::from(b)).collect();
    ImagePlane::from_unpadded(header.width, header.height, &samples)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ImagePlane> {
    decode_pgm(&fs::read(path)?)
}

/// Encodes the original-size region of `plane` as an 8-bit P5 file.
pub fn encode_pgm(plane: &ImagePlane) -> Vec<u8> {
    encode_pgm_u8(plane.orig_width(), plane.orig_height(), &plane.to_u8_cropped())
}

pub fn encode_pgm_u8(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// 16-bit P5 (maxval 65535, big-endian samples).
pub fn encode_pgm_u16(width: usize, height: usize, pixels: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for p in pixels {
        out.extend_from_slice(&p.to_be_bytes());
    }
    out
}

pub fn save_pgm(path: impl AsRef<Path>, plane: &ImagePlane) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(plane))?;
    Ok(())
}
