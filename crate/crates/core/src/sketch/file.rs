//! SKJ1 sketch files.
//!
//! ```text
//! "SKJ1" | version u8 = 1 | width u32 | height u32 | n_s u32 | seed u64
//!        | tag_len u16 | tag (UTF-8) | n_s * width * height f32, row-major
//! ```
//! All integers and floats little-endian. Entries are stored as `f32`, so
//! writing rounds in-memory `f64` values; anything read back re-serializes
//! byte-identically.

use std::fs;
use std::path::Path;

use super::SketchedJacobian;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SKJ1";
pub const VERSION: u8 = 1;
const FIXED_HEADER: usize = 4 + 1 + 4 + 4 + 4 + 8 + 2;

pub fn encode_sketch(j: &SketchedJacobian) -> Result<Vec<u8>> {
    let tag = j.source_tag().as_bytes();
    let tag_len = u16::try_from(tag.len())
        .map_err(|_| Error::domain("source tag longer than 65535 bytes"))?;
    let mut out = Vec::with_capacity(FIXED_HEADER + tag.len() + 4 * j.entries().len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(j.width() as u32).to_le_bytes());
    out.extend_from_slice(&(j.height() as u32).to_le_bytes());
    out.extend_from_slice(&(j.n_s() as u32).to_le_bytes());
    out.extend_from_slice(&j.seed().to_le_bytes());
    out.extend_from_slice(&tag_len.to_le_bytes());
    out.extend_from_slice(tag);
    for &v in j.entries() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_sketch(data: &[u8]) -> Result<SketchedJacobian> {
    if data.len() < FIXED_HEADER {
        return Err(Error::format("sketch file shorter than header"));
    }
    if &data[..4] != MAGIC {
        return Err(Error::format("bad sketch magic"));
    }
    if data[4] != VERSION {
        return Err(Error::format(format!("unsupported sketch version {}", data[4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(data[o..o + 4].try_into().unwrap()) as usize;
    let width = u32_at(5);
    let height = u32_at(9);
    let n_s = u32_at(13);
    let seed = u64::from_le_bytes(data[17..25].try_into().unwrap());
    let tag_len = u16::from_le_bytes([data[25], data[26]]) as usize;
    let tag_end = FIXED_HEADER + tag_len;
    if data.len() < tag_end {
        return Err(Error::format("truncated sketch source tag"));
    }
    let tag = std::str::from_utf8(&data[FIXED_HEADER..tag_end])
        .map_err(|_| Error::format("sketch source tag is not UTF-8"))?;
    let n = n_s
        .checked_mul(width)
        .and_then(|v| v.checked_mul(height))
        .ok_or_else(|| Error::format("sketch dimensions overflow"))?;
    let payload = &data[tag_end..];
    if payload.len() != 4 * n {
        return Err(Error::format(format!(
            "sketch payload is {} bytes, header implies {}",
            payload.len(),
            4 * n
        )));
    }
    let entries = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    SketchedJacobian::new(width, height, n_s, entries, seed, tag)
        .map_err(|e| Error::format(format!("invalid sketch header: {e}")))
}

pub fn write_sketch(path: impl AsRef<Path>, j: &SketchedJacobian) -> Result<()> {
    fs::write(path, encode_sketch(j)?)?;
    Ok(())
}

pub fn read_sketch(path: impl AsRef<Path>) -> Result<SketchedJacobian> {
    decode_sketch(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Prng;
    use proptest::prelude::*;

    fn random(n_s: usize, w: usize, h: usize, seed: u64, tag: &str) -> SketchedJacobian {
        let mut rng = Prng::new(seed);
        let e = (0..n_s * w * h).map(|_| rng.normal()).collect();
        SketchedJacobian::new(w, h, n_s, e, seed, tag).unwrap()
    }

    #[test]
    fn layout_is_pinned() {
        let j = SketchedJacobian::new(16, 16, 1, vec![1.0; 256], 0x0102, "ab").unwrap();
        let b = encode_sketch(&j).unwrap();
        assert_eq!(&b[..5], b"SKJ1\x01");
        assert_eq!(&b[5..9], &16u32.to_le_bytes());
        assert_eq!(&b[13..17], &1u32.to_le_bytes());
        assert_eq!(&b[17..25], &0x0102u64.to_le_bytes());
        assert_eq!(&b[25..29], b"\x02\x00ab");
        assert_eq!(&b[29..33], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 29 + 4 * 256);
    }

    #[test]
    fn truncated_and_corrupt() {
        let b = encode_sketch(&random(2, 16, 16, 1, "x")).unwrap();
        assert!(matches!(decode_sketch(&b[..b.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(decode_sketch(&b[..10]), Err(Error::Format(_))));
        let mut bad = b.clone();
        bad[3] = b'2';
        assert!(matches!(decode_sketch(&bad), Err(Error::Format(_))));
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(matches!(decode_sketch(&bad), Err(Error::Format(_))));
        let mut long = b;
        long.push(0);
        assert!(matches!(decode_sketch(&long), Err(Error::Format(_))));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.skj");
        let j = random(3, 32, 16, 4, "toy:blur_down");
        write_sketch(&path, &j).unwrap();
        let back = read_sketch(&path).unwrap();
        assert_eq!(back.source_tag(), "toy:blur_down");
        assert_eq!(back.seed(), 4);
        for (a, b) in j.entries().iter().zip(back.entries()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    proptest! {
        #[test]
        fn reserialization_is_byte_identical(n_s in 1usize..4, mx in 1usize..3, seed in any::<u64>(), tag in "[a-z:_]{0,12}") {
            let bytes = encode_sketch(&random(n_s, 16 * mx, 16, seed, &tag)).unwrap();
            let again = encode_sketch(&decode_sketch(&bytes).unwrap()).unwrap();
            prop_assert_eq!(bytes, again);
        }
    }
}
