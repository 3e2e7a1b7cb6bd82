//! Run-level Exp-Golomb coding of quantized transform blocks.
//!
//! A block is coded as `ue(n_nz)` followed by `n_nz` pairs
//! `ue(zero run before coefficient), se(level)`, coefficients visited in
//! zig-zag order.

use std::sync::OnceLock;

use super::bits::{se_len, ue_len, BitReader, BitWriter};
use crate::error::{Error, Result};

fn build_zigzag(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for r in lo..=hi {
                order.push(r * n + (s - r));
            }
        } else {
            for r in (lo..=hi).rev() {
                order.push(r * n + (s - r));
            }
        }
    }
    order
}

/// Zig-zag scan for a `size x size` block: entry `k` is the row-major index
/// of the k-th scanned coefficient.
pub fn zigzag(size: usize) -> Result<&'static [usize]> {
    static Z4: OnceLock<Vec<usize>> = OnceLock::new();
    static Z16: OnceLock<Vec<usize>> = OnceLock::new();
    match size {
        4 => Ok(Z4.get_or_init(|| build_zigzag(4))),
        16 => Ok(Z16.get_or_init(|| build_zigzag(16))),
        _ => Err(Error::domain(format!("no zig-zag scan for size {size}"))),
    }
}

/// Exact coded size in bits of a block given in row-major order.
pub fn block_bits(levels: &[i32], scan: &[usize]) -> u32 {
    let mut n_nz = 0u32;
    let mut bits = 0u32;
    let mut run = 0u32;
    for &idx in scan {
        let q = levels[idx];
        if q == 0 {
            run += 1;
        } else {
            n_nz += 1;
            bits += ue_len(run) + se_len(q);
            run = 0;
        }
    }
    bits + ue_len(n_nz)
}

/// Writes a row-major block; returns the number of bits emitted.
pub fn entropy_encode_block(levels: &[i32], scan: &[usize], w: &mut BitWriter) -> u32 {
    let start = w.bit_len();
    let n_nz = scan.iter().filter(|&&i| levels[i] != 0).count() as u32;
    w.write_ue(n_nz);
    let mut run = 0u32;
    for &idx in scan {
        let q = levels[idx];
        if q == 0 {
            run += 1;
        } else {
            w.write_ue(run);
            w.write_se(q);
            run = 0;
        }
    }
    (w.bit_len() - start) as u32
}

/// Reads a block into `levels` (row-major).
pub fn entropy_decode_block(r: &mut BitReader<'_>, scan: &[usize], levels: &mut [i32]) -> Result<()> {
    levels.iter_mut().for_each(|q| *q = 0);
    let n = scan.len();
    let n_nz = r.read_ue()? as usize;
    if n_nz > n {
        return Err(Error::format(format!(
            "block claims {n_nz} nonzero coefficients of {n}"
        )));
    }
    let mut pos = 0usize;
    for _ in 0..n_nz {
        let run = r.read_ue()? as usize;
        pos = pos
            .checked_add(run)
            .filter(|&p| p < n)
            .ok_or_else(|| Error::format("zero run past end of block"))?;
        let level = r.read_se()?;
        if level == 0 {
            return Err(Error::format("zero level in run-level pair"));
        }
        levels[scan[pos]] = level;
        pos += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Prng;

    #[test]
    fn zigzag_4_prefix() {
        let z = zigzag(4).unwrap();
        let rc: Vec<(usize, usize)> = z[..6].iter().map(|&i| (i / 4, i % 4)).collect();
        assert_eq!(rc, vec![(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(z[15], 15);
    }

    #[test]
    fn zigzag_is_bijective() {
        for n in [4, 16] {
            let mut z = zigzag(n).unwrap().to_vec();
            assert_eq!(z.len(), n * n);
            z.sort_unstable();
            assert_eq!(z, (0..n * n).collect::<Vec<_>>());
        }
        assert!(zigzag(8).is_err());
    }

    #[test]
    fn all_zero_block_is_one_bit() {
        let scan = zigzag(4).unwrap();
        let mut w = BitWriter::new();
        assert_eq!(entropy_encode_block(&[0; 16], scan, &mut w), 1);
        assert_eq!(block_bits(&[0; 16], scan), 1);
    }

    #[test]
    fn dc_one_is_seven_bits() {
        let scan = zigzag(16).unwrap();
        let mut levels = [0; 256];
        levels[0] = 1;
        let mut w = BitWriter::new();
        assert_eq!(entropy_encode_block(&levels, scan, &mut w), 7);
        // ue(1) ue(0) se(1) = 010 1 010
        assert_eq!(w.finish(), vec![0b0101_0100]);
    }

    #[test]
    fn random_sparse_blocks_roundtrip() {
        let mut rng = Prng::new(99);
        for trial in 0..10_000 {
            let size = if trial % 2 == 0 { 4 } else { 16 };
            let scan = zigzag(size).unwrap();
            let n = size * size;
            let mut levels = vec![0i32; n];
            let density = rng.uniform() * 0.3;
            for q in levels.iter_mut() {
                if rng.uniform() < density {
                    let cap = if rng.uniform() < 0.1 { 2000 } else { 8 };
                    let mag = 1 + rng.below(cap) as i32;
                    *q = if rng.uniform() < 0.5 { -mag } else { mag };
                }
            }
            let mut w = BitWriter::new();
            let bits = entropy_encode_block(&levels, scan, &mut w);
            assert_eq!(bits, block_bits(&levels, scan));
            let bytes = w.finish();
            let mut r = BitReader::new(&bytes);
            let mut back = vec![0i32; n];
            entropy_decode_block(&mut r, scan, &mut back).unwrap();
            assert_eq!(back, levels);
            assert_eq!(r.position(), u64::from(bits));
        }
    }

    #[test]
    fn decode_rejects_overlong_runs() {
        let scan = zigzag(4).unwrap();
        let mut w = BitWriter::new();
        w.write_ue(1);
        w.write_ue(16);
        w.write_se(1);
        let bytes = w.finish();
        let mut levels = [0; 16];
        assert!(entropy_decode_block(&mut BitReader::new(&bytes), scan, &mut levels).is_err());
    }
}
