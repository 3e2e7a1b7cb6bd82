//! Frozen conv_relu_conv weights and their TFW1 container.
//!
//! ```text
//! "TFW1" | version u8 | n_tensors u32 | per tensor: rank u32, dims u32 x rank,
//!        | f32 data (row-major)
//! ```
//! Little-endian throughout. The checked-in file `data/conv_relu_conv.tfw` is
//! produced by [`generate_conv_weights`] with [`CONV_WEIGHTS_SEED`].

use crate::error::{Error, Result};
use crate::prng::Prng;

pub const MAGIC: &[u8; 4] = b"TFW1";
pub const VERSION: u8 = 1;
pub const CONV_WEIGHTS_SEED: u64 = 0x1D5E_C0DE;
pub const HIDDEN_CHANNELS: usize = 4;
pub const OUTPUT_CHANNELS: usize = 2;

static FROZEN: &[u8] = include_bytes!("../../data/conv_relu_conv.tfw");

/// Weights of `conv3x3(1->4) -> ReLU -> conv3x3(4->2)` on inputs scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvWeights {
    /// `[4][3][3]`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `[2][4][3][3]`
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ConvWeights {
    /// The versioned weights shipped with the crate.
    pub fn frozen() -> ConvWeights {
        decode_weights(FROZEN).expect("embedded weights file is valid")
    }

    pub fn with_zero_biases(&self) -> ConvWeights {
        ConvWeights {
            b1: vec![0.0; self.b1.len()],
            b2: vec![0.0; self.b2.len()],
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.w1.len() != HIDDEN_CHANNELS * 9
            || self.b1.len() != HIDDEN_CHANNELS
            || self.w2.len() != OUTPUT_CHANNELS * HIDDEN_CHANNELS * 9
            || self.b2.len() != OUTPUT_CHANNELS
        {
            return Err(Error::format("conv weights have wrong shapes"));
        }
        Ok(())
    }
}

/// Draws the weights. Hidden channels are three brightness detectors with
/// different thresholds and one zero-DC edge detector, each with a random
/// high-pass perturbation. All units are off on dark flat areas, so the
/// Jacobian is concentrated on bright structures and edges.
pub fn generate_conv_weights(seed: u64) -> ConvWeights {
    let mut rng = Prng::new(seed);
    let smooth = [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0].map(|v| v / 16.0);
    let dc_gain = [1.0, 1.0, 0.0, 0.5];
    let mut w1 = Vec::with_capacity(36);
    for &dc in &dc_gain {
        let mut noise: Vec<f64> = (0..9).map(|_| rng.normal() * 0.6).collect();
        let mean = noise.iter().sum::<f64>() / 9.0;
        noise.iter_mut().for_each(|v| *v -= mean);
        w1.extend(smooth.iter().zip(&noise).map(|(s, n)| dc * s + n));
    }
    let b1 = vec![
        -rng.uniform_range(0.50, 0.60),
        -rng.uniform_range(0.70, 0.80),
        -rng.uniform_range(0.04, 0.06),
        -rng.uniform_range(0.35, 0.45),
    ];
    let w2 = (0..OUTPUT_CHANNELS * HIDDEN_CHANNELS * 9)
        .map(|_| rng.normal() * 0.5)
        .collect();
    let b2 = (0..OUTPUT_CHANNELS).map(|_| rng.normal() * 0.1).collect();
    ConvWeights { w1, b1, w2, b2 }
}

pub fn encode_weights(w: &ConvWeights) -> Vec<u8> {
    let tensors: [(&[usize], &[f64]); 4] = [
        (&[HIDDEN_CHANNELS, 1, 3, 3], &w.w1),
        (&[HIDDEN_CHANNELS], &w.b1),
        (&[OUTPUT_CHANNELS, HIDDEN_CHANNELS, 3, 3], &w.w2),
        (&[OUTPUT_CHANNELS], &w.b2),
    ];
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (dims, data) in tensors {
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for &d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(data: &[u8]) -> Result<ConvWeights> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = data
            .get(pos..pos + n)
            .ok_or_else(|| Error::format("truncated weights file"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(Error::format("bad weights magic"));
    }
    if take(1)?[0] != VERSION {
        return Err(Error::format("unsupported weights version"));
    }
    let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let n = read_u32(take(4)?);
    if n != 4 {
        return Err(Error::format(format!("expected 4 tensors, found {n}")));
    }
    let mut tensors = Vec::with_capacity(4);
    for _ in 0..n {
        let rank = read_u32(take(4)?);
        if rank > 8 {
            return Err(Error::format("tensor rank too large"));
        }
        let mut count = 1usize;
        for _ in 0..rank {
            count = count.saturating_mul(read_u32(take(4)?));
        }
        let bytes = take(count.saturating_mul(4))?;
        tensors.push(
            bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect::<Vec<f64>>(),
        );
    }
    if pos != data.len() {
        return Err(Error::format("trailing bytes in weights file"));
    }
    let b2 = tensors.pop().unwrap();
    let w2 = tensors.pop().unwrap();
    let b1 = tensors.pop().unwrap();
    let w1 = tensors.pop().unwrap();
    let w = ConvWeights { w1, b1, w2, b2 };
    w.validate()?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_file_matches_generator() {
        let frozen = ConvWeights::frozen();
        let fresh = decode_weights(&encode_weights(&generate_conv_weights(CONV_WEIGHTS_SEED))).unwrap();
        assert_eq!(frozen, fresh);
        assert_eq!(encode_weights(&frozen), FROZEN);
    }

    #[test]
    fn corrupt_files_rejected() {
        let mut b = FROZEN.to_vec();
        b[0] = b'X';
        assert!(decode_weights(&b).is_err());
        assert!(decode_weights(&FROZEN[..FROZEN.len() - 2]).is_err());
    }
}
