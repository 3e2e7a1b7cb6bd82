//! Macroblock geometry.
//!
//! Macroblocks are 16x16 and indexed in raster order. Inside a macroblock,
//! pixels are ordered row-major; the transform and the sketch block slices
//! share this order.

use crate::error::{Error, Result};
use crate::image::ImagePlane;

pub const MB_SIZE: usize = 16;
pub const SUB_SIZE: usize = 4;
/// Pixels per macroblock.
pub const MB_PIXELS: usize = MB_SIZE * MB_SIZE;

/// Pixel values of one macroblock, row-major.
pub type Block = [f64; MB_PIXELS];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    width: usize,
    height: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width % MB_SIZE != 0 || height % MB_SIZE != 0 {
            return Err(Error::domain(format!(
                "grid {width}x{height} is not a positive multiple of {MB_SIZE}"
            )));
        }
        Ok(BlockGrid { width, height })
    }

    pub fn for_plane(plane: &ImagePlane) -> Self {
        BlockGrid {
            width: plane.width(),
            height: plane.height(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn mbs_x(&self) -> usize {
        self.width / MB_SIZE
    }

    pub fn mbs_y(&self) -> usize {
        self.height / MB_SIZE
    }

    /// Number of macroblocks, `n_b`.
    pub fn n_blocks(&self) -> usize {
        self.mbs_x() * self.mbs_y()
    }

    /// Top-left pixel `(x, y)` of macroblock `block`.
    pub fn origin(&self, block: usize) -> (usize, usize) {
        let bx = block % self.mbs_x();
        let by = block / self.mbs_x();
        (bx * MB_SIZE, by * MB_SIZE)
    }

    /// Raster pixel index of intra-block position `k` (row-major) in `block`.
    #[inline]
    pub fn pixel_index(&self, block: usize, k: usize) -> usize {
        let (x0, y0) = self.origin(block);
        (y0 + k / MB_SIZE) * self.width + x0 + k % MB_SIZE
    }

    /// Raster pixel indices of `block` in intra-block order.
    pub fn pixel_indices(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        let (x0, y0) = self.origin(block);
        (0..MB_PIXELS).map(move |k| (y0 + k / MB_SIZE) * self.width + x0 + k % MB_SIZE)
    }

    /// Macroblock containing raster pixel `p`, and its intra-block position.
    pub fn locate(&self, p: usize) -> (usize, usize) {
        let (x, y) = (p % self.width, p / self.width);
        let block = (y / MB_SIZE) * self.mbs_x() + x / MB_SIZE;
        (block, (y % MB_SIZE) * MB_SIZE + x % MB_SIZE)
    }

    pub fn check_index(&self, block: usize) -> Result<()> {
        if block >= self.n_blocks() {
            return Err(Error::domain(format!(
                "block index {block} out of range (n_b = {})",
                self.n_blocks()
            )));
        }
        Ok(())
    }
}

/// Splits a plane into macroblocks in raster order.
pub fn split_blocks(plane: &ImagePlane) -> Vec<Block> {
    let grid = BlockGrid::for_plane(plane);
    let samples = plane.samples();
    (0..grid.n_blocks())
        .map(|b| {
            let mut block = [0.0; MB_PIXELS];
            for (k, p) in grid.pixel_indices(b).enumerate() {
                block[k] = samples[p];
            }
            block
        })
        .collect()
}

/// Inverse of [`split_blocks`] for a given grid.
pub fn assemble_blocks(grid: &BlockGrid, blocks: &[Block]) -> Vec<f64> {
    assert_eq!(blocks.len(), grid.n_blocks(), "block count mismatch");
    let mut out = vec![0.0; grid.n_pixels()];
    for (b, block) in blocks.iter().enumerate() {
        for (k, p) in grid.pixel_indices(b).enumerate() {
            out[p] = block[k];
        }
    }
    out
}
