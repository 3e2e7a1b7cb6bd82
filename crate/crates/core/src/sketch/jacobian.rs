use crate::error::{Error, Result};
use crate::grid::{BlockGrid, MB_PIXELS};
use crate::image::{encode_pgm_u16, ImagePlane};
use crate::linalg::DenseMatrix;

/// `n_s x n_p` sketched Jacobian on a padded pixel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchedJacobian {
    width: usize,
    height: usize,
    matrix: DenseMatrix,
    seed: u64,
    source_tag: String,
}

impl SketchedJacobian {
    pub fn new(
        width: usize,
        height: usize,
        n_s: usize,
        entries: Vec<f64>,
        seed: u64,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        BlockGrid::new(width, height)?;
        if n_s == 0 {
            return Err(Error::domain("sketched Jacobian needs at least one row"));
        }
        if entries.len() != n_s * width * height {
            return Err(Error::domain(format!(
                "{} entries for {n_s} x {} matrix",
                entries.len(),
                width * height
            )));
        }
        Ok(SketchedJacobian {
            width,
            height,
            matrix: DenseMatrix::from_vec(n_s, width * height, entries),
            seed,
            source_tag: source_tag.into(),
        })
    }

    /// Wraps an unsketched Jacobian (`S = I`).
    pub fn from_full(width: usize, height: usize, jacobian: DenseMatrix, tag: impl Into<String>) -> Result<Self> {
        let rows = jacobian.rows();
        if jacobian.cols() != width * height {
            return Err(Error::domain("Jacobian columns do not match the grid"));
        }
        Self::new(width, height, rows, jacobian.data().to_vec(), 0, tag)
    }

    /// The identity Jacobian on a grid (`n_s = n_p`).
    pub fn identity(width: usize, height: usize) -> Result<Self> {
        Self::from_full(width, height, DenseMatrix::identity(width * height), "identity")
    }

    pub fn n_s(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_p(&self) -> usize {
        self.matrix.cols()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn entries(&self) -> &[f64] {
        self.matrix.data()
    }

    pub fn grid(&self) -> BlockGrid {
        BlockGrid::new(self.width, self.height).expect("validated at construction")
    }

    /// Errors unless the sketch was computed on `plane`'s padded grid.
    pub fn check_grid(&self, plane: &ImagePlane) -> Result<()> {
        if plane.width() != self.width || plane.height() != self.height {
            return Err(Error::GridMismatch {
                sketch_w: self.width,
                sketch_h: self.height,
                image_w: plane.width(),
                image_h: plane.height(),
            });
        }
        Ok(())
    }

    fn check_grid_dims(&self, grid: &BlockGrid) -> Result<()> {
        if grid.width() != self.width || grid.height() != self.height {
            return Err(Error::GridMismatch {
                sketch_w: self.width,
                sketch_h: self.height,
                image_w: grid.width(),
                image_h: grid.height(),
            });
        }
        Ok(())
    }

    /// Copy with every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        SketchedJacobian {
            matrix: self.matrix.scaled(s),
            ..self.clone()
        }
    }

    /// `n_s x 256` columns of macroblock `block`, intra-block row-major order.
    pub fn block_slice(&self, grid: &BlockGrid, block: usize) -> Result<DenseMatrix> {
        self.check_grid_dims(grid)?;
        grid.check_index(block)?;
        let n_s = self.n_s();
        let mut out = DenseMatrix::zeros(n_s, MB_PIXELS);
        for r in 0..n_s {
            let src = self.matrix.row(r);
            let dst = out.row_mut(r);
            for (k, p) in grid.pixel_indices(block).enumerate() {
                dst[k] = src[p];
            }
        }
        Ok(out)
    }

    /// `||J_s^(i)||_F^2` for every macroblock.
    pub fn frobenius_sq_per_block(&self, grid: &BlockGrid) -> Result<Vec<f64>> {
        self.check_grid_dims(grid)?;
        let mut out = vec![0.0; grid.n_blocks()];
        for r in 0..self.n_s() {
            for (p, &v) in self.matrix.row(r).iter().enumerate() {
                out[grid.locate(p).0] += v * v;
            }
        }
        Ok(out)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.frobenius_sq()
    }

    /// `diag(J_s^T J_s)` as a per-pixel map.
    pub fn importance_map(&self) -> ImportanceMap {
        let mut weights = vec![0.0; self.n_p()];
        for r in 0..self.n_s() {
            for (w, &v) in weights.iter_mut().zip(self.matrix.row(r)) {
                *w += v * v;
            }
        }
        ImportanceMap {
            width: self.width,
            height: self.height,
            weights,
        }
    }
}

/// Per-pixel nonnegative weights on the padded grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceMap {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl ImportanceMap {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != width * height {
            return Err(Error::domain("importance map size mismatch"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::domain("importance weights must be nonnegative"));
        }
        Ok(ImportanceMap {
            width,
            height,
            weights,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted squared error `sum_j w_j e_j^2 / n_p`.
    pub fn weighted_mse(&self, reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
        if reference.n_pixels() != self.weights.len() || test.n_pixels() != self.weights.len() {
            return Err(Error::domain("importance map does not match image size"));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(reference.samples().iter().zip(test.samples()))
            .map(|(w, (a, b))| w * (a - b) * (a - b))
            .sum();
        Ok(s / self.weights.len() as f64)
    }

    /// Max-normalized 16-bit values (all zero if the map is zero).
    pub fn to_u16(&self) -> Vec<u16> {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return vec![0; self.weights.len()];
        }
        self.weights
            .iter()
            .map(|w| (w / max * 65535.0).round() as u16)
            .collect()
    }

    /// 16-bit big-endian P5 (maxval 65535).
    pub fn to_pgm16(&self) -> Vec<u8> {
        encode_pgm_u16(self.width, self.height, &self.to_u16())
    }
}
