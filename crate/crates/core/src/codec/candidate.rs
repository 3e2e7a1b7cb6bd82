//! RDO candidates: every (dqp, partition) choice for one macroblock.

use super::bits::{BitReader, BitWriter};
use super::dct::{forward_mb, inverse_mb, Partition};
use super::entropy::{block_bits, entropy_decode_block, entropy_encode_block, zigzag};
use super::quant::{dequantize, quantize, QuantizerSpec, DQP_MAX, DQP_MIN};
use crate::error::{Error, Result};
use crate::grid::{Block, MB_PIXELS};

/// Candidates per macroblock: 9 QP offsets times 2 partitions.
pub const N_CANDIDATES: usize = ((DQP_MAX - DQP_MIN + 1) as usize) * 2;

/// Partition flag plus the 4-bit dqp field.
pub const SIDE_INFO_BITS: u32 = 5;

/// Quantized levels of a macroblock, laid out like [`forward_mb`] output.
pub type Levels = [i32; MB_PIXELS];

/// Candidate index for `(dqp, partition)`; dqp is the outer loop.
pub fn candidate_index(dqp: i32, partition: Partition) -> usize {
    ((dqp - DQP_MIN) as usize) * 2 + partition.bit() as usize
}

pub fn candidate_params(index: usize) -> (i32, Partition) {
    (
        DQP_MIN + (index / 2) as i32,
        Partition::from_bit((index % 2) as u32),
    )
}

/// One coding choice for a macroblock.
#[derive(Clone, Debug)]
pub struct CodingCandidate {
    pub partition: Partition,
    pub dqp: i32,
    pub levels: Box<Levels>,
    /// Dequantized coefficients in the partition's layout.
    pub recon_coeffs: Block,
    /// Reconstructed pixels (not clipped).
    pub recon: Block,
    /// Exact payload size including side information.
    pub bits: u32,
}

/// All candidates of one block together with its forward transforms.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub pixels: Block,
    /// Original coefficients, indexed by `Partition::bit()`.
    pub coeffs: [Block; 2],
    pub candidates: Vec<CodingCandidate>,
}

impl CandidateSet {
    pub fn coeffs_for(&self, partition: Partition) -> &Block {
        &self.coeffs[partition.bit() as usize]
    }
}

/// Coefficient payload bits for a candidate's levels (no side info).
pub fn levels_bits(levels: &Levels, partition: Partition) -> u32 {
    match partition {
        Partition::Whole16 => block_bits(levels, zigzag(16).unwrap()),
        Partition::Split4 => {
            let scan = zigzag(4).unwrap();
            levels.chunks(16).map(|c| block_bits(c, scan)).sum()
        }
    }
}

/// Reconstruction for given levels; used identically by encoder and decoder.
pub fn reconstruct(levels: &Levels, partition: Partition, qp: i32, dqp: i32) -> (Block, Block) {
    let step = QuantizerSpec::new(qp, dqp).step();
    let mut coeffs = [0.0; MB_PIXELS];
    dequantize(levels, step, &mut coeffs);
    let pixels = inverse_mb(&coeffs, partition);
    (coeffs, pixels)
}

fn build_candidate(coeffs: &Block, partition: Partition, qp: i32, dqp: i32) -> CodingCandidate {
    let step = QuantizerSpec::new(qp, dqp).step();
    let mut levels = Box::new([0i32; MB_PIXELS]);
    quantize(coeffs, step, &mut levels[..]);
    let (recon_coeffs, recon) = reconstruct(&levels, partition, qp, dqp);
    let bits = SIDE_INFO_BITS + levels_bits(&levels, partition);
    CodingCandidate {
        partition,
        dqp,
        levels,
        recon_coeffs,
        recon,
        bits,
    }
}

/// Transforms, quantizes, and reconstructs `block` for every (dqp, partition).
pub fn enumerate_candidates(block: &Block, base_qp: i32) -> CandidateSet {
    let coeffs = [
        forward_mb(block, Partition::Whole16),
        forward_mb(block, Partition::Split4),
    ];
    let mut candidates = Vec::with_capacity(N_CANDIDATES);
    for dqp in DQP_MIN..=DQP_MAX {
        for partition in Partition::ALL {
            candidates.push(build_candidate(
                &coeffs[partition.bit() as usize],
                partition,
                base_qp,
                dqp,
            ));
        }
    }
    CandidateSet {
        pixels: *block,
        coeffs,
        candidates,
    }
}

/// Macroblock syntax: partition bit, 4-bit two's-complement dqp, coefficient blocks.
pub fn write_macroblock(w: &mut BitWriter, partition: Partition, dqp: i32, levels: &Levels) -> u32 {
    let start = w.bit_len();
    w.write_bits(partition.bit(), 1);
    w.write_bits((dqp as u32) & 0xf, 4);
    match partition {
        Partition::Whole16 => {
            entropy_encode_block(levels, zigzag(16).unwrap(), w);
        }
        Partition::Split4 => {
            let scan = zigzag(4).unwrap();
            for chunk in levels.chunks(16) {
                entropy_encode_block(chunk, scan, w);
            }
        }
    }
    (w.bit_len() - start) as u32
}

pub fn read_macroblock(r: &mut BitReader<'_>) -> Result<(Partition, i32, Box<Levels>)> {
    let partition = Partition::from_bit(r.read_bits(1)?);
    let raw = r.read_bits(4)? as i32;
    let dqp = if raw >= 8 { raw - 16 } else { raw };
    if !(DQP_MIN..=DQP_MAX).contains(&dqp) {
        return Err(Error::format(format!("dqp {dqp} outside [{DQP_MIN}, {DQP_MAX}]")));
    }
    let mut levels = Box::new([0i32; MB_PIXELS]);
    match partition {
        Partition::Whole16 => entropy_decode_block(r, zigzag(16).unwrap(), &mut levels[..])?,
        Partition::Split4 => {
            let scan = zigzag(4).unwrap();
            for chunk in levels.chunks_mut(16) {
                entropy_decode_block(r, scan, chunk)?;
            }
        }
    }
    Ok((partition, dqp, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Prng;

    fn random_block(rng: &mut Prng) -> Block {
        let mut b = [0.0; MB_PIXELS];
        let base = rng.uniform_range(40.0, 200.0);
        for v in b.iter_mut() {
            *v = (base + rng.normal() * 20.0).clamp(0.0, 255.0);
        }
        b
    }

    #[test]
    fn index_mapping() {
        for i in 0..N_CANDIDATES {
            let (dqp, p) = candidate_params(i);
            assert_eq!(candidate_index(dqp, p), i);
        }
        assert_eq!(N_CANDIDATES, 18);
    }

    #[test]
    fn zero_block_all_zero() {
        let set = enumerate_candidates(&[0.0; MB_PIXELS], 30);
        assert_eq!(set.candidates.len(), 18);
        for c in &set.candidates {
            assert!(c.recon.iter().all(|&v| v == 0.0));
            let expect = SIDE_INFO_BITS + if c.partition == Partition::Whole16 { 1 } else { 16 };
            assert_eq!(c.bits, expect);
        }
    }

    #[test]
    fn bits_floor_and_exactness() {
        let mut rng = Prng::new(1);
        for _ in 0..20 {
            let set = enumerate_candidates(&random_block(&mut rng), 27);
            for c in &set.candidates {
                assert!(c.bits >= SIDE_INFO_BITS);
                let mut w = BitWriter::new();
                let written = write_macroblock(&mut w, c.partition, c.dqp, &c.levels);
                assert_eq!(written, c.bits);
                let bytes = w.finish();
                let (p, dqp, levels) = read_macroblock(&mut BitReader::new(&bytes)).unwrap();
                assert_eq!((p, dqp), (c.partition, c.dqp));
                assert_eq!(levels, c.levels);
            }
        }
    }

    #[test]
    fn sse_weakly_decreases_with_finer_steps() {
        let mut rng = Prng::new(2);
        let mut totals = [[0.0f64; 9]; 2];
        for _ in 0..100 {
            let set = enumerate_candidates(&random_block(&mut rng), 33);
            for c in &set.candidates {
                let sse: f64 = c.recon.iter().zip(&set.pixels).map(|(a, b)| (a - b).powi(2)).sum();
                totals[c.partition.bit() as usize][(c.dqp - DQP_MIN) as usize] += sse;
            }
        }
        for row in &totals {
            for w in row.windows(2) {
                assert!(w[0] <= w[1], "{row:?}");
            }
        }
    }
}
