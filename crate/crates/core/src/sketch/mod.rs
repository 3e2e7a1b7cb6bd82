//! Rademacher sketching of feature-extractor Jacobians.
//!
//! A sketch `S` has i.i.d. entries `+-1/sqrt(n_s)`. Applied to a Jacobian
//! `J_f(x)` it yields the short, wide matrix `J_s = S J_f(x)` whose block
//! column slices drive the IDSE distortion.

mod file;
mod jacobian;
mod norm;

pub use file::{decode_sketch, encode_sketch, read_sketch, write_sketch};
pub use jacobian::{ImportanceMap, SketchedJacobian};
pub use norm::{spectral_norm_sq, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::linalg::DenseMatrix;
use crate::prng::Prng;
use crate::toyfe::ToyFeatureExtractor;

/// Row cap for randomly drawn sketches (dense `n_s x n_p` storage).
pub const MAX_SKETCH_ROWS: usize = 64;

/// Default sketch size used by the encoder.
pub const DEFAULT_SKETCH_ROWS: usize = 8;

/// Default Johnson-Lindenstrauss constant. Heuristic: the lemma only fixes it
/// up to an unspecified numerical factor.
pub const DEFAULT_JL_CONSTANT: f64 = 1.0;

/// Sketch dimension `ceil(c * ln(n_r + 1) / eps^2)`, at least 1.
pub fn jl_dimension(n_candidates: usize, epsilon: f64, c_jl: f64) -> Result<usize> {
    if n_candidates == 0 {
        return Err(Error::domain("candidate count must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(c_jl > 0.0 && c_jl.is_finite()) {
        return Err(Error::domain(format!("JL constant {c_jl} must be positive")));
    }
    let n = (c_jl * ((n_candidates + 1) as f64).ln() / (epsilon * epsilon)).ceil();
    Ok((n as usize).max(1))
}

/// Dense Rademacher matrix with entries `+-1/sqrt(n_s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchMatrix {
    seed: u64,
    matrix: DenseMatrix,
}

impl SketchMatrix {
    pub fn n_s(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_f(&self) -> usize {
        self.matrix.cols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    /// Sketch whose entry `k` (row-major) is negative iff bit `k` of `bits`
    /// is set; used to enumerate all sign patterns of tiny sketches.
    pub fn from_sign_bits(n_s: usize, n_f: usize, bits: u64) -> Result<Self> {
        if n_s == 0 || n_f == 0 || n_s * n_f > 64 {
            return Err(Error::domain(format!("sign-bit sketch {n_s}x{n_f} needs 1..=64 entries")));
        }
        let scale = 1.0 / (n_s as f64).sqrt();
        let data = (0..n_s * n_f)
            .map(|k| if bits >> k & 1 == 1 { -scale } else { scale })
            .collect();
        Ok(SketchMatrix {
            seed: 0,
            matrix: DenseMatrix::from_vec(n_s, n_f, data),
        })
    }

    /// `S v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.matvec(v)
    }
}

/// Draws an `n_s x n_f` sketch from `prng`; signs are consumed row by row.
pub fn draw_sketch(n_s: usize, n_f: usize, prng: &mut Prng) -> Result<SketchMatrix> {
    if n_s == 0 || n_f == 0 {
        return Err(Error::domain(format!("sketch shape {n_s}x{n_f} must be nonempty")));
    }
    let scale = 1.0 / (n_s as f64).sqrt();
    let mut matrix = DenseMatrix::zeros(n_s, n_f);
    for r in 0..n_s {
        let row = matrix.row_mut(r);
        prng.fill_signs(row);
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(SketchMatrix {
        seed: prng.seed(),
        matrix,
    })
}

/// `S J_f(x)`, one row per vector-Jacobian product `s_i^T J_f(x)`.
pub fn sketch_linear_jacobian(
    fe: &ToyFeatureExtractor,
    x: &ImagePlane,
    sketch: &SketchMatrix,
) -> Result<SketchedJacobian> {
    let n_f = fe.output_dim(x)?;
    if sketch.n_f() != n_f {
        return Err(Error::domain(format!(
            "sketch has {} columns, extractor has {n_f} outputs",
            sketch.n_f()
        )));
    }
    let mut entries = Vec::with_capacity(sketch.n_s() * x.n_pixels());
    for r in 0..sketch.n_s() {
        entries.extend(fe.vjp(x, sketch.row(r))?);
    }
    SketchedJacobian::new(
        x.width(),
        x.height(),
        sketch.n_s(),
        entries,
        sketch.seed(),
        format!("toy:{}", fe.name()),
    )
}

/// Draws a Rademacher sketch (at most [`MAX_SKETCH_ROWS`] rows) and applies it.
pub fn sketch_extractor(
    fe: &ToyFeatureExtractor,
    x: &ImagePlane,
    n_s: usize,
    seed: u64,
) -> Result<SketchedJacobian> {
    if n_s == 0 || n_s > MAX_SKETCH_ROWS {
        return Err(Error::domain(format!(
            "sketch rows {n_s} outside 1..={MAX_SKETCH_ROWS}"
        )));
    }
    let mut prng = Prng::new(seed);
    let sketch = draw_sketch(n_s, fe.output_dim(x)?, &mut prng)?;
    sketch_linear_jacobian(fe, x, &sketch)
}
