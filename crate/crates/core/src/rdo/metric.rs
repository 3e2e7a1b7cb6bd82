use rayon::prelude::*;

use crate::codec::{forward_mb, CandidateSet, CodingCandidate, MetricKind, Partition};
use crate::error::{Error, Result};
use crate::grid::{BlockGrid, MB_PIXELS};
use crate::linalg::{norm_sq, DenseMatrix};
use crate::sketch::SketchedJacobian;

/// Lagrangian constant used when none is given.
pub const DEFAULT_LAMBDA_C: f64 = 0.57;

/// Default SSE regularization multiplier (`tau = alpha * tau_tilde`).
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Where block distortions are evaluated. Both give the same values up to
/// rounding; the transform domain skips the inverse transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Domain {
    Pixel,
    #[default]
    Transform,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Pixel => "pixel",
            Domain::Transform => "transform",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricConfig {
    pub kind: MetricKind,
    /// `tau = alpha * tau_tilde`.
    pub alpha: f64,
    /// Normalizer; computed from the Jacobian when `None`.
    pub tau_tilde: Option<f64>,
    pub lambda_c: f64,
    /// Overrides the Lagrangian formula when set.
    pub lambda: Option<f64>,
    pub domain: Domain,
}

impl MetricConfig {
    pub fn sse() -> Self {
        MetricConfig {
            kind: MetricKind::Sse,
            alpha: DEFAULT_ALPHA,
            tau_tilde: None,
            lambda_c: DEFAULT_LAMBDA_C,
            lambda: None,
            domain: Domain::default(),
        }
    }

    pub fn idse() -> Self {
        MetricConfig {
            kind: MetricKind::Idse,
            ..Self::sse()
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_tau_tilde(mut self, tau_tilde: f64) -> Self {
        self.tau_tilde = Some(tau_tilde);
        self
    }

    pub fn with_lambda_c(mut self, c: f64) -> Self {
        self.lambda_c = c;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lambda_c > 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::domain(format!("lambda constant must be > 0, got {}", self.lambda_c)));
        }
        if let Some(t) = self.tau_tilde {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::domain(format!("tau_tilde must be >= 0, got {t}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::domain(format!("lambda must be >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Sum of squared errors.
pub fn sse(e: &[f64]) -> f64 {
    norm_sq(e)
}

/// `||Jb e||^2 + tau ||e||^2` for a block slice `Jb` (`n_s x 256`).
pub fn idse_block(jb: &DenseMatrix, e: &[f64], tau: f64) -> Result<f64> {
    if jb.cols() != e.len() {
        return Err(Error::domain(format!(
            "block slice has {} columns, error has {} samples",
            jb.cols(),
            e.len()
        )));
    }
    Ok(jb.norm_sq_of_product(e) + tau * norm_sq(e))
}

/// Transform-domain form: `||B e_y||^2 + tau ||e_y||^2` with `B = Jb U`.
pub fn idse_block_transform(b: &DenseMatrix, e_y: &[f64], tau: f64) -> Result<f64> {
    idse_block(b, e_y, tau)
}

/// `B = Jb U`: every row of `Jb` goes through the forward transform.
pub fn transform_block_slice(jb: &DenseMatrix, partition: Partition) -> Result<DenseMatrix> {
    if jb.cols() != MB_PIXELS {
        return Err(Error::domain("block slice must have 256 columns"));
    }
    let mut out = DenseMatrix::zeros(jb.rows(), MB_PIXELS);
    let mut row = [0.0; MB_PIXELS];
    for r in 0..jb.rows() {
        row.copy_from_slice(jb.row(r));
        out.row_mut(r).copy_from_slice(&forward_mb(&row, partition));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct BlockMatrices {
    pixel: DenseMatrix,
    /// Indexed by `Partition::bit()`.
    transform: Option<[DenseMatrix; 2]>,
}

/// Per-block matrices derived from a sketched Jacobian.
///
/// All-zero rows of a block slice are dropped; they contribute nothing to
/// the distortion and dominate the cost for sparse Jacobians such as `S = I`.
#[derive(Clone, Debug)]
pub struct BlockMetricState {
    grid: BlockGrid,
    domain: Domain,
    tau: f64,
    blocks: Vec<BlockMatrices>,
    frobenius_sq: Vec<f64>,
}

impl BlockMetricState {
    pub fn new(j: &SketchedJacobian, domain: Domain, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
        }
        let grid = j.grid();
        let frobenius_sq = j.frobenius_sq_per_block(&grid)?;
        let blocks = (0..grid.n_blocks())
            .into_par_iter()
            .map(|i| -> Result<BlockMatrices> {
                let pixel = compact_rows(&j.block_slice(&grid, i)?);
                let transform = match domain {
                    Domain::Pixel => None,
                    Domain::Transform => Some([
                        transform_block_slice(&pixel, Partition::Whole16)?,
                        transform_block_slice(&pixel, Partition::Split4)?,
                    ]),
                };
                Ok(BlockMatrices { pixel, transform })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockMetricState {
            grid,
            domain,
            tau,
            blocks,
            frobenius_sq,
        })
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn frobenius_sq(&self) -> &[f64] {
        &self.frobenius_sq
    }

    /// Pixel-domain block slice with zero rows removed.
    pub fn block_matrix(&self, block: usize) -> &DenseMatrix {
        &self.blocks[block].pixel
    }

    /// `B = Jb U` for `partition`, if the state was built for the transform domain.
    pub fn transform_matrix(&self, block: usize, partition: Partition) -> Option<&DenseMatrix> {
        self.blocks[block]
            .transform
            .as_ref()
            .map(|t| &t[partition.bit() as usize])
    }

    /// Regularized IDSE of one candidate of block `block`.
    pub fn candidate_idse(&self, block: usize, set: &CandidateSet, cand: &CodingCandidate) -> f64 {
        let mut e = [0.0; MB_PIXELS];
        match self.transform_matrix(block, cand.partition) {
            Some(b) => {
                let y = set.coeffs_for(cand.partition);
                for ((e, r), o) in e.iter_mut().zip(&cand.recon_coeffs).zip(y) {
                    *e = r - o;
                }
                b.norm_sq_of_product(&e) + self.tau * norm_sq(&e)
            }
            None => {
                for ((e, r), o) in e.iter_mut().zip(&cand.recon).zip(&set.pixels) {
                    *e = r - o;
                }
                self.blocks[block].pixel.norm_sq_of_product(&e) + self.tau * norm_sq(&e)
            }
        }
    }
}

/// Pixel-domain SSE of a candidate.
pub fn candidate_sse(set: &CandidateSet, cand: &CodingCandidate) -> f64 {
    cand.recon
        .iter()
        .zip(&set.pixels)
        .map(|(r, o)| (r - o) * (r - o))
        .sum()
}

fn compact_rows(m: &DenseMatrix) -> DenseMatrix {
    let keep: Vec<usize> = (0..m.rows()).filter(|&r| m.row(r).iter().any(|v| *v != 0.0)).collect();
    if keep.len() == m.rows() {
        return m.clone();
    }
    let mut data = Vec::with_capacity(keep.len() * m.cols());
    for &r in &keep {
        data.extend_from_slice(m.row(r));
    }
    DenseMatrix::from_vec(keep.len(), m.cols(), data)
}
