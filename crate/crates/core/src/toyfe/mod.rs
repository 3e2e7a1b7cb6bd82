//! Analytic feature extractors with exact Jacobians.
//!
//! These play the role of the downstream network at desk scale: features,
//! Jacobian-vector products, and vector-Jacobian products are all exact, so
//! they serve as oracles for the linearization, localization, and sketching
//! steps of the codec.

mod lipschitz;
pub mod weights;

use std::sync::Arc;

pub use lipschitz::{lipschitz_bound_check, LipschitzCheck, LipschitzTask, TaskLoss};
pub use weights::ConvWeights;

use crate::error::{Error, Result};
use crate::grid::{BlockGrid, MB_PIXELS};
use crate::image::ImagePlane;
use crate::linalg::{dot, DenseMatrix};
use crate::prng::Prng;
use weights::{HIDDEN_CHANNELS, OUTPUT_CHANNELS};

/// Inputs to the conv extractor are scaled by this factor.
const CONV_INPUT_SCALE: f64 = 1.0 / 255.0;

/// Largest dense Jacobian [`ToyFeatureExtractor::exact_jacobian`] will build.
pub const MAX_DENSE_JACOBIAN_ENTRIES: usize = 1 << 25;

/// Default number of outputs per macroblock for [`ToyFeatureExtractor::block_linear`].
pub const BLOCK_LINEAR_OUTPUTS: usize = 16;

#[derive(Clone, Debug)]
pub enum ToyKind {
    Identity,
    /// Separable `[1, 2, 1] / 4` blur with stride 2, edge replication.
    BlurDown,
    /// `conv3x3(1->4) -> ReLU -> conv3x3(4->2)`, zero padding.
    ConvReluConv(Arc<ConvWeights>),
    /// Independent dense operator per macroblock (block-diagonal Jacobian).
    BlockLinear { outputs_per_block: usize, seed: u64, operators: Arc<Vec<DenseMatrix>> },
}

#[derive(Clone, Debug)]
pub struct ToyFeatureExtractor {
    kind: ToyKind,
    width: usize,
    height: usize,
}

impl ToyFeatureExtractor {
    pub fn identity(width: usize, height: usize) -> Result<Self> {
        Self::with_kind(ToyKind::Identity, width, height)
    }

    pub fn blur_down(width: usize, height: usize) -> Result<Self> {
        Self::with_kind(ToyKind::BlurDown, width, height)
    }

    /// Conv extractor with the frozen repository weights.
    pub fn conv_relu_conv(width: usize, height: usize) -> Result<Self> {
        Self::conv_with_weights(width, height, ConvWeights::frozen())
    }

    pub fn conv_with_weights(width: usize, height: usize, weights: ConvWeights) -> Result<Self> {
        Self::with_kind(ToyKind::ConvReluConv(Arc::new(weights)), width, height)
    }

    /// Block-diagonal linear extractor: macroblock `i` maps to its own
    /// `outputs_per_block` features through a seeded Gaussian operator with
    /// a per-block gain in `[0.25, 2]`.
    pub fn block_linear(width: usize, height: usize, outputs_per_block: usize, seed: u64) -> Result<Self> {
        let grid = BlockGrid::new(width, height)?;
        if outputs_per_block == 0 {
            return Err(Error::domain("block_linear needs at least one output per block"));
        }
        let mut rng = Prng::new(seed);
        let scale = 1.0 / (MB_PIXELS as f64).sqrt();
        let operators = (0..grid.n_blocks())
            .map(|_| {
                let gain = rng.uniform_range(0.25, 2.0) * scale;
                let data = (0..outputs_per_block * MB_PIXELS).map(|_| rng.normal() * gain).collect();
                DenseMatrix::from_vec(outputs_per_block, MB_PIXELS, data)
            })
            .collect();
        Self::with_kind(
            ToyKind::BlockLinear {
                outputs_per_block,
                seed,
                operators: Arc::new(operators),
            },
            width,
            height,
        )
    }

    /// Builds an extractor by name (`identity`, `blur_down`, `conv_relu_conv`, `block_linear`).
    pub fn by_name(name: &str, width: usize, height: usize) -> Result<Self> {
        match name {
            "identity" => Self::identity(width, height),
            "blur_down" => Self::blur_down(width, height),
            "conv_relu_conv" => Self::conv_relu_conv(width, height),
            "block_linear" => Self::block_linear(width, height, BLOCK_LINEAR_OUTPUTS, 0),
            _ => Err(Error::domain(format!("unknown feature extractor '{name}'"))),
        }
    }

    fn with_kind(kind: ToyKind, width: usize, height: usize) -> Result<Self> {
        BlockGrid::new(width, height)?;
        Ok(ToyFeatureExtractor { kind, width, height })
    }

    pub fn kind(&self) -> &ToyKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ToyKind::Identity => "identity",
            ToyKind::BlurDown => "blur_down",
            ToyKind::ConvReluConv(_) => "conv_relu_conv",
            ToyKind::BlockLinear { .. } => "block_linear",
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.kind, ToyKind::ConvReluConv(_))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    fn check(&self, x: &ImagePlane) -> Result<()> {
        if x.width() != self.width || x.height() != self.height {
            return Err(Error::GridMismatch {
                sketch_w: self.width,
                sketch_h: self.height,
                image_w: x.width(),
                image_h: x.height(),
            });
        }
        Ok(())
    }

    /// Feature count `n_f`.
    pub fn output_dim(&self, x: &ImagePlane) -> Result<usize> {
        self.check(x)?;
        Ok(self.dim())
    }

    fn dim(&self) -> usize {
        match &self.kind {
            ToyKind::Identity => self.n_pixels(),
            ToyKind::BlurDown => self.n_pixels() / 4,
            ToyKind::ConvReluConv(_) => OUTPUT_CHANNELS * self.n_pixels(),
            ToyKind::BlockLinear { outputs_per_block, operators, .. } => outputs_per_block * operators.len(),
        }
    }

    /// `f(x)`.
    pub fn features(&self, x: &ImagePlane) -> Result<Vec<f64>> {
        self.check(x)?;
        let s = x.samples();
        Ok(match &self.kind {
            ToyKind::Identity => s.to_vec(),
            ToyKind::BlurDown => blur_down(s, self.width, self.height),
            ToyKind::ConvReluConv(w) => {
                let hidden = conv1(w, s, self.width, self.height, true);
                let act: Vec<f64> = hidden.iter().map(|&h| h.max(0.0)).collect();
                conv2(w, &act, self.width, self.height, true)
            }
            ToyKind::BlockLinear { operators, .. } => block_apply(operators, s, self.width, self.height),
        })
    }

    /// `J(x) v`.
    pub fn jvp(&self, x: &ImagePlane, v: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if v.len() != self.n_pixels() {
            return Err(Error::domain("jvp direction has wrong length"));
        }
        Ok(match &self.kind {
            ToyKind::Identity => v.to_vec(),
            ToyKind::BlurDown => blur_down(v, self.width, self.height),
            ToyKind::ConvReluConv(w) => {
                let mask = relu_mask(w, x.samples(), self.width, self.height);
                let mut h = conv1(w, v, self.width, self.height, false);
                h.iter_mut().zip(&mask).for_each(|(h, &m)| if !m { *h = 0.0 });
                conv2(w, &h, self.width, self.height, false)
            }
            ToyKind::BlockLinear { operators, .. } => block_apply(operators, v, self.width, self.height),
        })
    }

    /// `J(x)^T w`.
    pub fn vjp(&self, x: &ImagePlane, w: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if w.len() != self.dim() {
            return Err(Error::domain("vjp cotangent has wrong length"));
        }
        Ok(match &self.kind {
            ToyKind::Identity => w.to_vec(),
            ToyKind::BlurDown => blur_down_adjoint(w, self.width, self.height),
            ToyKind::ConvReluConv(weights) => {
                let mask = relu_mask(weights, x.samples(), self.width, self.height);
                let mut g = conv2_adjoint(weights, w, self.width, self.height);
                g.iter_mut().zip(&mask).for_each(|(g, &m)| if !m { *g = 0.0 });
                conv1_adjoint(weights, &g, self.width, self.height)
            }
            ToyKind::BlockLinear { operators, .. } => block_apply_adjoint(operators, w, self.width, self.height),
        })
    }

    /// Dense `n_f x n_p` Jacobian at `x`; refuses very large matrices.
    pub fn exact_jacobian(&self, x: &ImagePlane) -> Result<DenseMatrix> {
        self.check(x)?;
        let (n_f, n_p) = (self.dim(), self.n_pixels());
        if n_f.saturating_mul(n_p) > MAX_DENSE_JACOBIAN_ENTRIES {
            return Err(Error::domain(format!(
                "dense Jacobian {n_f}x{n_p} exceeds {MAX_DENSE_JACOBIAN_ENTRIES} entries"
            )));
        }
        let mut j = DenseMatrix::zeros(n_f, n_p);
        match &self.kind {
            ToyKind::Identity => return Ok(DenseMatrix::identity(n_p)),
            ToyKind::BlockLinear { outputs_per_block, operators, .. } => {
                let grid = BlockGrid::new(self.width, self.height)?;
                for (b, op) in operators.iter().enumerate() {
                    for r in 0..*outputs_per_block {
                        let row = j.row_mut(b * outputs_per_block + r);
                        for (k, p) in grid.pixel_indices(b).enumerate() {
                            row[p] = op.get(r, k);
                        }
                    }
                }
            }
            _ => {
                let mut e = vec![0.0; n_f];
                for r in 0..n_f {
                    e[r] = 1.0;
                    j.row_mut(r).copy_from_slice(&self.vjp(x, &e)?);
                    e[r] = 0.0;
                }
            }
        }
        Ok(j)
    }

    /// `diag(J^T J)`: exact squared column norms, one per pixel.
    pub fn column_norms_sq(&self, x: &ImagePlane) -> Result<Vec<f64>> {
        self.check(x)?;
        let (w, h) = (self.width, self.height);
        Ok(match &self.kind {
            ToyKind::Identity => vec![1.0; w * h],
            ToyKind::BlockLinear { operators, .. } => {
                let grid = BlockGrid::new(w, h)?;
                let mut out = vec![0.0; w * h];
                for (b, op) in operators.iter().enumerate() {
                    for (k, p) in grid.pixel_indices(b).enumerate() {
                        out[p] = (0..op.rows()).map(|r| op.get(r, k).powi(2)).sum();
                    }
                }
                out
            }
            ToyKind::BlurDown => {
                // Each input pixel reaches at most a 2x2 neighborhood of outputs.
                let mut out = vec![0.0; w * h];
                let mut e = vec![0.0; w * h];
                for p in 0..w * h {
                    e[p] = 1.0;
                    out[p] = blur_down(&e, w, h).iter().map(|v| v * v).sum();
                    e[p] = 0.0;
                }
                out
            }
            ToyKind::ConvReluConv(weights) => conv_column_norms(weights, x.samples(), w, h),
        })
    }

    /// Squared feature distance `||f(x_hat) - f(x)||^2`.
    pub fn feature_distance(&self, x: &ImagePlane, x_hat: &ImagePlane) -> Result<f64> {
        let a = self.features(x)?;
        let b = self.features(x_hat)?;
        Ok(a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum())
    }
}

fn blur_down(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    const K: [f64; 3] = [0.25, 0.5, 0.25];
    let (ow, oh) = (w / 2, h / 2);
    let mut out = vec![0.0; ow * oh];
    for v in 0..oh {
        for u in 0..ow {
            let mut acc = 0.0;
            for (a, ka) in K.iter().enumerate() {
                let y = (2 * v + a).saturating_sub(1).min(h - 1);
                for (b, kb) in K.iter().enumerate() {
                    let x = (2 * u + b).saturating_sub(1).min(w - 1);
                    acc += ka * kb * src[y * w + x];
                }
            }
            out[v * ow + u] = acc;
        }
    }
    out
}

fn blur_down_adjoint(g: &[f64], w: usize, h: usize) -> Vec<f64> {
    const K: [f64; 3] = [0.25, 0.5, 0.25];
    let (ow, oh) = (w / 2, h / 2);
    let mut out = vec![0.0; w * h];
    for v in 0..oh {
        for u in 0..ow {
            let gv = g[v * ow + u];
            if gv == 0.0 {
                continue;
            }
            for (a, ka) in K.iter().enumerate() {
                let y = (2 * v + a).saturating_sub(1).min(h - 1);
                for (b, kb) in K.iter().enumerate() {
                    let x = (2 * u + b).saturating_sub(1).min(w - 1);
                    out[y * w + x] += ka * kb * gv;
                }
            }
        }
    }
    out
}

fn block_apply(ops: &[DenseMatrix], src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let grid = BlockGrid::new(w, h).expect("validated grid");
    let mut out = Vec::with_capacity(ops.len() * ops.first().map_or(0, |o| o.rows()));
    let mut block = [0.0; MB_PIXELS];
    for (b, op) in ops.iter().enumerate() {
        for (k, p) in grid.pixel_indices(b).enumerate() {
            block[k] = src[p];
        }
        out.extend((0..op.rows()).map(|r| dot(op.row(r), &block)));
    }
    out
}

fn block_apply_adjoint(ops: &[DenseMatrix], g: &[f64], w: usize, h: usize) -> Vec<f64> {
    let grid = BlockGrid::new(w, h).expect("validated grid");
    let mut out = vec![0.0; w * h];
    let mut offset = 0;
    for (b, op) in ops.iter().enumerate() {
        let back = op.matvec_t(&g[offset..offset + op.rows()]);
        offset += op.rows();
        for (k, p) in grid.pixel_indices(b).enumerate() {
            out[p] = back[k];
        }
    }
    out
}

/// Hidden pre-activations `[c][p]` (bias optional), input scaled to `[0, 1]`.
fn conv1(wt: &ConvWeights, src: &[f64], w: usize, h: usize, bias: bool) -> Vec<f64> {
    let n = w * h;
    let mut out = vec![0.0; HIDDEN_CHANNELS * n];
    for c in 0..HIDDEN_CHANNELS {
        let k = &wt.w1[c * 9..(c + 1) * 9];
        let b = if bias { wt.b1[c] } else { 0.0 };
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in 0..3 {
                    let yy = y + dy;
                    if yy < 1 || yy > h {
                        continue;
                    }
                    for dx in 0..3 {
                        let xx = x + dx;
                        if xx < 1 || xx > w {
                            continue;
                        }
                        acc += k[dy * 3 + dx] * src[(yy - 1) * w + xx - 1];
                    }
                }
                out[c * n + y * w + x] = b + CONV_INPUT_SCALE * acc;
            }
        }
    }
    out
}

fn conv1_adjoint(wt: &ConvWeights, g: &[f64], w: usize, h: usize) -> Vec<f64> {
    let n = w * h;
    let mut out = vec![0.0; n];
    for c in 0..HIDDEN_CHANNELS {
        let k = &wt.w1[c * 9..(c + 1) * 9];
        for y in 0..h {
            for x in 0..w {
                let gv = g[c * n + y * w + x];
                if gv == 0.0 {
                    continue;
                }
                for dy in 0..3 {
                    let yy = y + dy;
                    if yy < 1 || yy > h {
                        continue;
                    }
                    for dx in 0..3 {
                        let xx = x + dx;
                        if xx < 1 || xx > w {
                            continue;
                        }
                        out[(yy - 1) * w + xx - 1] += CONV_INPUT_SCALE * k[dy * 3 + dx] * gv;
                    }
                }
            }
        }
    }
    out
}

fn conv2(wt: &ConvWeights, act: &[f64], w: usize, h: usize, bias: bool) -> Vec<f64> {
    let n = w * h;
    let mut out = vec![0.0; OUTPUT_CHANNELS * n];
    for o in 0..OUTPUT_CHANNELS {
        let b = if bias { wt.b2[o] } else { 0.0 };
        for y in 0..h {
            for x in 0..w {
                let mut acc = b;
                for c in 0..HIDDEN_CHANNELS {
                    let k = &wt.w2[(o * HIDDEN_CHANNELS + c) * 9..(o * HIDDEN_CHANNELS + c + 1) * 9];
                    let a = &act[c * n..(c + 1) * n];
                    for dy in 0..3 {
                        let yy = y + dy;
                        if yy < 1 || yy > h {
                            continue;
                        }
                        for dx in 0..3 {
                            let xx = x + dx;
                            if xx < 1 || xx > w {
                                continue;
                            }
                            acc += k[dy * 3 + dx] * a[(yy - 1) * w + xx - 1];
                        }
                    }
                }
                out[o * n + y * w + x] = acc;
            }
        }
    }
    out
}

fn conv2_adjoint(wt: &ConvWeights, g: &[f64], w: usize, h: usize) -> Vec<f64> {
    let n = w * h;
    let mut out = vec![0.0; HIDDEN_CHANNELS * n];
    for o in 0..OUTPUT_CHANNELS {
        for y in 0..h {
            for x in 0..w {
                let gv = g[o * n + y * w + x];
                if gv == 0.0 {
                    continue;
                }
                for c in 0..HIDDEN_CHANNELS {
                    let k = &wt.w2[(o * HIDDEN_CHANNELS + c) * 9..(o * HIDDEN_CHANNELS + c + 1) * 9];
                    for dy in 0..3 {
                        let yy = y + dy;
                        if yy < 1 || yy > h {
                            continue;
                        }
                        for dx in 0..3 {
                            let xx = x + dx;
                            if xx < 1 || xx > w {
                                continue;
                            }
                            out[c * n + (yy - 1) * w + xx - 1] += k[dy * 3 + dx] * gv;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Active-unit mask of the hidden layer. A pre-activation exactly at the
/// kink is treated as nudged by `+1e-9`, i.e. active.
fn relu_mask(wt: &ConvWeights, x: &[f64], w: usize, h: usize) -> Vec<bool> {
    conv1(wt, x, w, h, true)
        .iter()
        .map(|&v| v >= 0.0)
        .collect()
}

/// Exact `diag(J^T J)` for the conv extractor using the local support of
/// each input pixel (5x5 output neighborhood).
fn conv_column_norms(wt: &ConvWeights, x: &[f64], w: usize, h: usize) -> Vec<f64> {
    let n = w * h;
    let mask = relu_mask(wt, x, w, h);
    let mut out = vec![0.0; n];
    let (wi, hi) = (w as isize, h as isize);
    for py in 0..hi {
        for px in 0..wi {
            // hidden response to a unit input at (px, py): 3x3 neighborhood
            let mut hid = [[0.0f64; 9]; HIDDEN_CHANNELS];
            for c in 0..HIDDEN_CHANNELS {
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let (hy, hx) = (py + dy, px + dx);
                        if hy < 0 || hy >= hi || hx < 0 || hx >= wi {
                            continue;
                        }
                        if !mask[c * n + (hy * wi + hx) as usize] {
                            continue;
                        }
                        // hidden(hy,hx) reads input at offset (py-hy, px-hx) = (-dy, -dx)
                        let k = ((1 - dy) * 3 + (1 - dx)) as usize;
                        hid[c][((dy + 1) * 3 + dx + 1) as usize] = CONV_INPUT_SCALE * wt.w1[c * 9 + k];
                    }
                }
            }
            let mut total = 0.0;
            for o in 0..OUTPUT_CHANNELS {
                for oy in -2..=2isize {
                    for ox in -2..=2isize {
                        let (ty, tx) = (py + oy, px + ox);
                        if ty < 0 || ty >= hi || tx < 0 || tx >= wi {
                            continue;
                        }
                        let mut acc = 0.0;
                        for c in 0..HIDDEN_CHANNELS {
                            let k2 = &wt.w2[(o * HIDDEN_CHANNELS + c) * 9..(o * HIDDEN_CHANNELS + c + 1) * 9];
                            for dy in -1..=1isize {
                                for dx in -1..=1isize {
                                    // output (ty,tx) reads hidden at (ty+ey, tx+ex), ey in -1..=1
                                    let (ey, ex) = (py + dy - ty, px + dx - tx);
                                    if !(-1..=1).contains(&ey) || !(-1..=1).contains(&ex) {
                                        continue;
                                    }
                                    let hv = hid[c][((dy + 1) * 3 + dx + 1) as usize];
                                    if hv != 0.0 {
                                        acc += k2[((ey + 1) * 3 + ex + 1) as usize] * hv;
                                    }
                                }
                            }
                        }
                        total += acc * acc;
                    }
                }
            }
            out[(py * wi + px) as usize] = total;
        }
    }
    out
}
