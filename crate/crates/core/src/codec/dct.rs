//! Orthonormal separable 2-D DCT-II for 4x4 and 16x16 blocks.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{Block, MB_PIXELS, MB_SIZE, SUB_SIZE};

/// Block partition of a macroblock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partition {
    /// One 16x16 transform.
    Whole16,
    /// Sixteen 4x4 transforms in raster sub-block order.
    Split4,
}

impl Partition {
    pub const ALL: [Partition; 2] = [Partition::Whole16, Partition::Split4];

    pub fn transform_size(self) -> usize {
        match self {
            Partition::Whole16 => MB_SIZE,
            Partition::Split4 => SUB_SIZE,
        }
    }

    pub fn bit(self) -> u32 {
        match self {
            Partition::Whole16 => 0,
            Partition::Split4 => 1,
        }
    }

    pub fn from_bit(bit: u32) -> Self {
        if bit == 0 {
            Partition::Whole16
        } else {
            Partition::Split4
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Partition::Whole16 => "whole16",
            Partition::Split4 => "split4",
        }
    }
}

/// Orthonormal DCT-II of one square size.
#[derive(Debug)]
pub struct TransformSpec {
    size: usize,
    /// `basis[k * size + i]`: k-th basis function at sample i.
    basis: Vec<f64>,
}

impl TransformSpec {
    fn build(size: usize) -> Self {
        let n = size as f64;
        let mut basis = vec![0.0; size * size];
        for k in 0..size {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for i in 0..size {
                let arg = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n);
                basis[k * size + i] = scale * arg.cos();
            }
        }
        TransformSpec { size, basis }
    }

    /// Shared instance for `size` (4 or 16).
    pub fn get(size: usize) -> Result<&'static TransformSpec> {
        static DCT4: OnceLock<TransformSpec> = OnceLock::new();
        static DCT16: OnceLock<TransformSpec> = OnceLock::new();
        match size {
            4 => Ok(DCT4.get_or_init(|| TransformSpec::build(4))),
            16 => Ok(DCT16.get_or_init(|| TransformSpec::build(16))),
            _ => Err(Error::domain(format!("unsupported transform size {size}"))),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// 1-D basis matrix, row k = k-th basis vector.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.size * self.size {
            return Err(Error::domain(format!(
                "block of {len} samples does not match {0}x{0} transform",
                self.size
            )));
        }
        Ok(())
    }

    /// `Y = C X C^T` for a row-major block.
    pub fn forward(&self, block: &[f64]) -> Result<Vec<f64>> {
        self.check(block.len())?;
        let mut out = vec![0.0; block.len()];
        self.forward_into(block, &mut out);
        Ok(out)
    }

    /// `X = C^T Y C` for row-major coefficients.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check(coeffs.len())?;
        let mut out = vec![0.0; coeffs.len()];
        self.inverse_into(coeffs, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.size;
        let c = &self.basis;
        let mut tmp = [0.0f64; MB_PIXELS];
        // tmp = X C^T  (transform rows)
        for r in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += x[r * n + i] * c[k * n + i];
                }
                tmp[r * n + k] = acc;
            }
        }
        // Y = C tmp  (transform columns)
        for k in 0..n {
            for col in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += c[k * n + r] * tmp[r * n + col];
                }
                y[k * n + col] = acc;
            }
        }
    }

    pub(crate) fn inverse_into(&self, y: &[f64], x: &mut [f64]) {
        let n = self.size;
        let c = &self.basis;
        let mut tmp = [0.0f64; MB_PIXELS];
        // tmp = Y C
        for r in 0..n {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += y[r * n + k] * c[k * n + i];
                }
                tmp[r * n + i] = acc;
            }
        }
        // X = C^T tmp
        for i in 0..n {
            for col in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += c[k * n + i] * tmp[k * n + col];
                }
                x[i * n + col] = acc;
            }
        }
    }
}

/// Position of coefficient `j` of sub-block `sub` inside a macroblock, for
/// the split4 layout (`sub * 16 + j`).
#[inline]
pub(crate) fn sub_block_pixel(sub: usize, j: usize) -> usize {
    let (sx, sy) = ((sub % 4) * SUB_SIZE, (sub / 4) * SUB_SIZE);
    (sy + j / SUB_SIZE) * MB_SIZE + sx + j % SUB_SIZE
}

/// Forward transform of a macroblock under `partition`.
///
/// For `Split4` the result holds sixteen 4x4 coefficient blocks back to back,
/// sub-blocks in raster order.
pub fn forward_mb(block: &Block, partition: Partition) -> Block {
    let mut out = [0.0; MB_PIXELS];
    match partition {
        Partition::Whole16 => TransformSpec::get(16).unwrap().forward_into(block, &mut out),
        Partition::Split4 => {
            let t = TransformSpec::get(4).unwrap();
            let mut sub = [0.0; 16];
            for s in 0..16 {
                for (j, v) in sub.iter_mut().enumerate() {
                    *v = block[sub_block_pixel(s, j)];
                }
                t.forward_into(&sub, &mut out[s * 16..(s + 1) * 16]);
            }
        }
    }
    out
}

/// Inverse of [`forward_mb`].
pub fn inverse_mb(coeffs: &Block, partition: Partition) -> Block {
    let mut out = [0.0; MB_PIXELS];
    match partition {
        Partition::Whole16 => TransformSpec::get(16).unwrap().inverse_into(coeffs, &mut out),
        Partition::Split4 => {
            let t = TransformSpec::get(4).unwrap();
            let mut sub = [0.0; 16];
            for s in 0..16 {
                t.inverse_into(&coeffs[s * 16..(s + 1) * 16], &mut sub);
                for (j, v) in sub.iter().enumerate() {
                    out[sub_block_pixel(s, j)] = *v;
                }
            }
        }
    }
    out
}
