//! IDS1 container: fixed little-endian header followed by bit-packed
//! macroblock payloads in raster order.
//!
//! ```text
//! "IDS1" | version u8 | width u32 | height u32 | orig_w u32 | orig_h u32
//!        | base_qp u8 | metric u8 | reserved u16 | payload bits | zero pad
//! ```

use super::bits::{BitReader, BitWriter};
use super::candidate::{read_macroblock, reconstruct, write_macroblock, Levels};
use super::dct::Partition;
use crate::error::{Error, Result};
use crate::grid::{assemble_blocks, Block, BlockGrid, MB_SIZE};
use crate::image::ImagePlane;

pub const MAGIC: &[u8; 4] = b"IDS1";
pub const VERSION: u8 = 1;
pub const HEADER_BYTES: usize = 4 + 1 + 4 * 4 + 1 + 1 + 2;
pub const MAX_QP: u8 = 63;

/// Distortion metric the encoder used; informational for the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Sse,
    Idse,
}

impl MetricKind {
    pub fn id(self) -> u8 {
        match self {
            MetricKind::Sse => 0,
            MetricKind::Idse => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(MetricKind::Sse),
            1 => Ok(MetricKind::Idse),
            _ => Err(Error::format(format!("unknown metric id {id}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Sse => "sse",
            MetricKind::Idse => "idse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitstreamHeader {
    pub width: u32,
    pub height: u32,
    pub orig_width: u32,
    pub orig_height: u32,
    pub base_qp: u8,
    pub metric: MetricKind,
}

impl BitstreamHeader {
    pub fn for_plane(plane: &ImagePlane, base_qp: u8, metric: MetricKind) -> Self {
        BitstreamHeader {
            width: plane.width() as u32,
            height: plane.height() as u32,
            orig_width: plane.orig_width() as u32,
            orig_height: plane.orig_height() as u32,
            base_qp,
            metric,
        }
    }

    pub fn grid(&self) -> Result<BlockGrid> {
        BlockGrid::new(self.width as usize, self.height as usize)
            .map_err(|e| Error::format(e.to_string()))
    }

    /// Number of macroblocks.
    pub fn n_blocks(&self) -> usize {
        (self.width as usize / MB_SIZE) * (self.height as usize / MB_SIZE)
    }

    fn validate(&self) -> Result<()> {
        self.grid()?;
        let (w, h, ow, oh) = (self.width, self.height, self.orig_width, self.orig_height);
        let m = MB_SIZE as u32;
        if ow == 0 || oh == 0 || ow > w || oh > h || w - ow >= m || h - oh >= m {
            return Err(Error::format(format!(
                "original size {ow}x{oh} inconsistent with coded {w}x{h}"
            )));
        }
        if self.base_qp > MAX_QP {
            return Err(Error::format(format!("base qp {} > {MAX_QP}", self.base_qp)));
        }
        Ok(())
    }
}

/// The per-macroblock syntax elements chosen by the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroblockChoice {
    pub partition: Partition,
    pub dqp: i32,
    pub levels: Box<Levels>,
}

/// Serializes a header and one choice per macroblock.
pub fn mux(header: &BitstreamHeader, choices: &[MacroblockChoice]) -> Result<Vec<u8>> {
    header.validate()?;
    if choices.len() != header.n_blocks() {
        return Err(Error::domain(format!(
            "{} macroblock choices for {} macroblocks",
            choices.len(),
            header.n_blocks()
        )));
    }
    let mut w = BitWriter::new();
    let mut head = Vec::with_capacity(HEADER_BYTES);
    head.extend_from_slice(MAGIC);
    head.push(VERSION);
    for v in [header.width, header.height, header.orig_width, header.orig_height] {
        head.extend_from_slice(&v.to_le_bytes());
    }
    head.push(header.base_qp);
    head.push(header.metric.id());
    head.extend_from_slice(&0u16.to_le_bytes());
    w.write_bytes(&head);
    for c in choices {
        write_macroblock(&mut w, c.partition, c.dqp, &c.levels);
    }
    Ok(w.finish())
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

pub fn parse_header(data: &[u8]) -> Result<BitstreamHeader> {
    if data.len() < HEADER_BYTES {
        return Err(Error::format("bitstream shorter than header"));
    }
    if &data[..4] != MAGIC {
        return Err(Error::format("bad bitstream magic"));
    }
    if data[4] != VERSION {
        return Err(Error::format(format!("unsupported bitstream version {}", data[4])));
    }
    let header = BitstreamHeader {
        width: le_u32(&data[5..]),
        height: le_u32(&data[9..]),
        orig_width: le_u32(&data[13..]),
        orig_height: le_u32(&data[17..]),
        base_qp: data[21],
        metric: MetricKind::from_id(data[22])?,
    };
    if data[23] != 0 || data[24] != 0 {
        return Err(Error::format("nonzero reserved header field"));
    }
    header.validate()?;
    Ok(header)
}

/// Parses a complete bitstream back into header and macroblock choices.
pub fn demux(data: &[u8]) -> Result<(BitstreamHeader, Vec<MacroblockChoice>)> {
    let header = parse_header(data)?;
    let mut r = BitReader::new(data);
    r.read_bytes(HEADER_BYTES)?;
    let mut choices = Vec::with_capacity(header.n_blocks());
    for _ in 0..header.n_blocks() {
        let (partition, dqp, levels) = read_macroblock(&mut r)?;
        choices.push(MacroblockChoice {
            partition,
            dqp,
            levels,
        });
    }
    let rest = r.remaining();
    if rest >= 8 {
        return Err(Error::format(format!("{} trailing bytes after payload", rest / 8)));
    }
    if rest > 0 && r.read_bits(rest as u32)? != 0 {
        return Err(Error::format("nonzero padding bits"));
    }
    Ok((header, choices))
}

/// Reconstructs the padded plane from header and choices.
pub fn reconstruct_plane(header: &BitstreamHeader, choices: &[MacroblockChoice]) -> Result<ImagePlane> {
    let grid = header.grid()?;
    let blocks: Vec<Block> = choices
        .iter()
        .map(|c| reconstruct(&c.levels, c.partition, i32::from(header.base_qp), c.dqp).1)
        .collect();
    ImagePlane::with_original(
        grid.width(),
        grid.height(),
        header.orig_width as usize,
        header.orig_height as usize,
        assemble_blocks(&grid, &blocks),
    )
}

/// Full decoder: bitstream bytes to reconstructed (padded) plane.
pub fn decode(data: &[u8]) -> Result<ImagePlane> {
    let (header, choices) = demux(data)?;
    reconstruct_plane(&header, &choices)
}
