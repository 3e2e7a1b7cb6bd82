//! MSB-first bit packing and Exp-Golomb codes.

use crate::error::{Error, Result};

/// Bit length of `ue(v)`.
#[inline]
pub fn ue_len(v: u32) -> u32 {
    let nbits = 64 - (u64::from(v) + 1).leading_zeros();
    2 * nbits - 1
}

/// Maps a signed value to its `ue` code number: `k > 0 -> 2k - 1`, `k <= 0 -> -2k`.
#[inline]
pub fn se_to_ue(k: i32) -> u32 {
    if k > 0 {
        (2 * k as i64 - 1) as u32
    } else {
        (-2 * k as i64) as u32
    }
}

#[inline]
pub fn ue_to_se(v: u32) -> i32 {
    if v % 2 == 1 {
        ((v as i64 + 1) / 2) as i32
    } else {
        -((v / 2) as i64) as i32
    }
}

#[inline]
pub fn se_len(k: i32) -> u32 {
    ue_len(se_to_ue(k))
}

#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    n_acc: u32,
    total: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total bits written so far.
    pub fn bit_len(&self) -> u64 {
        self.total
    }

    /// Writes the low `n` bits of `value`, most significant first (`n <= 32`).
    pub fn write_bits(&mut self, value: u32, n: u32) {
        debug_assert!(n <= 32);
        if n == 0 {
            return;
        }
        let masked = u64::from(value) & ((1u64 << n) - 1);
        self.acc = (self.acc << n) | masked;
        self.n_acc += n;
        self.total += u64::from(n);
        while self.n_acc >= 8 {
            self.n_acc -= 8;
            self.bytes.push((self.acc >> self.n_acc) as u8);
        }
        self.acc &= (1u64 << self.n_acc) - 1;
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write_bits(u32::from(bit), 1);
    }

    pub fn write_ue(&mut self, v: u32) {
        let code = u64::from(v) + 1;
        let nbits = 64 - code.leading_zeros();
        let lz = nbits - 1;
        // lz zeros, then code in nbits bits (nbits <= 33)
        self.write_bits(0, lz.min(32));
        if lz > 32 {
            self.write_bits(0, lz - 32);
        }
        if nbits > 32 {
            self.write_bits((code >> 32) as u32, nbits - 32);
            self.write_bits(code as u32, 32);
        } else {
            self.write_bits(code as u32, nbits);
        }
    }

    pub fn write_se(&mut self, k: i32) {
        self.write_ue(se_to_ue(k));
    }

    /// Appends whole bytes; the writer must be byte aligned.
    pub fn write_bytes(&mut self, data: &[u8]) {
        assert_eq!(self.n_acc, 0, "write_bytes on unaligned writer");
        self.bytes.extend_from_slice(data);
        self.total += 8 * data.len() as u64;
    }

    /// Zero-pads to the next byte boundary and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.n_acc > 0 {
            let pad = 8 - self.n_acc;
            self.write_bits(0, pad);
        }
        self.bytes
    }
}

#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        8 * self.data.len() as u64 - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= 8 * self.data.len() as u64 {
            return Err(Error::format("unexpected end of bitstream"));
        }
        let byte = self.data[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(bit == 1)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u32> {
        debug_assert!(n <= 32);
        if self.remaining() < u64::from(n) {
            return Err(Error::format("unexpected end of bitstream"));
        }
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v as u32)
    }

    pub fn read_ue(&mut self) -> Result<u32> {
        let mut lz = 0u32;
        while !self.read_bit()? {
            lz += 1;
            if lz > 31 {
                return Err(Error::format("invalid Exp-Golomb prefix"));
            }
        }
        let suffix = self.read_bits(lz)?;
        let v = (1u64 << lz) - 1 + u64::from(suffix);
        u32::try_from(v).map_err(|_| Error::format("Exp-Golomb value overflow"))
    }

    pub fn read_se(&mut self) -> Result<i32> {
        Ok(ue_to_se(self.read_ue()?))
    }

    /// Reads `n` whole bytes; the reader must be byte aligned.
    pub fn read_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        assert_eq!(self.pos % 8, 0, "read_bytes on unaligned reader");
        let start = (self.pos / 8) as usize;
        if self.data.len() - start < n {
            return Err(Error::format("unexpected end of bitstream"));
        }
        self.pos += 8 * n as u64;
        Ok(&self.data[start..start + n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(f: impl FnOnce(&mut BitWriter)) -> String {
        let mut w = BitWriter::new();
        f(&mut w);
        let n = w.bit_len() as usize;
        let bytes = w.finish();
        (0..n)
            .map(|i| if (bytes[i / 8] >> (7 - i % 8)) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    #[test]
    fn ue_codewords() {
        assert_eq!(bits_of(|w| w.write_ue(0)), "1");
        assert_eq!(bits_of(|w| w.write_ue(1)), "010");
        assert_eq!(bits_of(|w| w.write_ue(2)), "011");
        assert_eq!(bits_of(|w| w.write_ue(3)), "00100");
        assert_eq!(bits_of(|w| w.write_ue(7)), "0001000");
    }

    #[test]
    fn se_mapping() {
        assert_eq!(se_to_ue(0), 0);
        assert_eq!(se_to_ue(1), 1);
        assert_eq!(se_to_ue(-1), 2);
        assert_eq!(se_to_ue(2), 3);
        for k in -1000..1000 {
            assert_eq!(ue_to_se(se_to_ue(k)), k);
        }
        assert_eq!(bits_of(|w| w.write_se(1)), "010");
        assert_eq!(bits_of(|w| w.write_se(-1)), "011");
    }

    #[test]
    fn lengths_match_writer() {
        for v in (0..5000).chain([u32::MAX - 1, 1 << 20, (1 << 31) - 1]) {
            let mut w = BitWriter::new();
            w.write_ue(v);
            assert_eq!(w.bit_len(), u64::from(ue_len(v)), "v = {v}");
            let bytes = w.finish();
            assert_eq!(BitReader::new(&bytes).read_ue().unwrap(), v);
        }
    }

    #[test]
    fn invalid_prefix_and_truncation() {
        assert!(BitReader::new(&[0, 0, 0, 0, 0]).read_ue().is_err());
        assert!(BitReader::new(&[0b0000_0001]).read_ue().is_err());
        let mut r = BitReader::new(&[0xff]);
        assert!(r.read_bits(9).is_err());
    }

    #[test]
    fn mixed_fields_roundtrip() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.write_se(-17);
        w.write_bits(0xdead_beef, 32);
        w.write_ue(12345);
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        assert_eq!(r.read_se().unwrap(), -17);
        assert_eq!(r.read_bits(32).unwrap(), 0xdead_beef);
        assert_eq!(r.read_ue().unwrap(), 12345);
    }
}
