use crate::error::{Error, Result};
use crate::grid::{BlockGrid, MB_SIZE};
use crate::image::ImagePlane;
use crate::linalg::dot;
use crate::toyfe::ToyFeatureExtractor;

use super::metric::MetricConfig;
use super::search::encode_with_rdo;

/// Residual QPs for the dominance statistics.
pub const DOMINANCE_QPS: [i32; 5] = [27, 31, 35, 39, 43];

/// Median with 15th and 85th percentiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantiles {
    pub p15: f64,
    pub median: f64,
    pub p85: f64,
    pub count: usize,
}

impl Quantiles {
    /// Linear-interpolation quantiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Quantiles> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Quantiles {
            p15: quantile_sorted(&v, 0.15),
            median: quantile_sorted(&v, 0.5),
            p85: quantile_sorted(&v, 0.85),
            count: v.len(),
        })
    }
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Distribution of normalized bilinear forms `b_i^T b_i` and `|b_j^T b_i|`,
/// `b_i = J^(i) e_i / (||e_i|| ||J||_F)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DominanceSummary {
    pub diagonal: Quantiles,
    /// All ordered pairs `i != j` within an image.
    pub off_diagonal: Quantiles,
    /// Only pairs of 8-connected neighboring blocks.
    pub off_diagonal_adjacent: Quantiles,
    pub n_blocks: usize,
}

impl DominanceSummary {
    pub fn ratio(&self) -> f64 {
        self.diagonal.median / self.off_diagonal.median
    }

    pub fn adjacent_ratio(&self) -> f64 {
        self.diagonal.median / self.off_diagonal_adjacent.median
    }
}

/// Raw samples behind [`DominanceSummary`].
#[derive(Clone, Debug, Default)]
pub struct DominanceSamples {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
    pub off_diagonal_adjacent: Vec<f64>,
    pub n_blocks: usize,
}

/// Collects the bilinear forms for the SSE-RDO residuals of every image at
/// every QP. Blocks with zero residual are skipped.
pub fn diagonal_dominance_samples(
    fe: &ToyFeatureExtractor,
    images: &[ImagePlane],
    qps: &[i32],
) -> Result<DominanceSamples> {
    let mut out = DominanceSamples::default();
    for x in images {
        let grid = BlockGrid::for_plane(x);
        let j_frob = fe.column_norms_sq(x)?.iter().sum::<f64>().sqrt();
        if j_frob == 0.0 {
            return Err(Error::domain("extractor Jacobian is zero"));
        }
        for &qp in qps {
            let enc = encode_with_rdo(x, qp, &MetricConfig::sse(), None)?;
            let e: Vec<f64> = enc
                .reconstruction
                .samples()
                .iter()
                .zip(x.samples())
                .map(|(r, o)| r - o)
                .collect();
            // b_i for every block with nonzero residual
            let mut b: Vec<(usize, Vec<f64>)> = Vec::new();
            for i in 0..grid.n_blocks() {
                let mut ei = vec![0.0; e.len()];
                let mut n2 = 0.0;
                for p in grid.pixel_indices(i) {
                    ei[p] = e[p];
                    n2 += e[p] * e[p];
                }
                if n2 == 0.0 {
                    continue;
                }
                let scale = 1.0 / (n2.sqrt() * j_frob);
                let mut v = fe.jvp(x, &ei)?;
                v.iter_mut().for_each(|t| *t *= scale);
                b.push((i, v));
            }
            out.n_blocks += b.len();
            for (a, (i, bi)) in b.iter().enumerate() {
                out.diagonal.push(dot(bi, bi));
                for (c, (j, bj)) in b.iter().enumerate() {
                    if a == c {
                        continue;
                    }
                    let v = dot(bj, bi).abs();
                    out.off_diagonal.push(v);
                    if adjacent(&grid, *i, *j) {
                        out.off_diagonal_adjacent.push(v);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn adjacent(grid: &BlockGrid, i: usize, j: usize) -> bool {
    let (xi, yi) = grid.origin(i);
    let (xj, yj) = grid.origin(j);
    xi.abs_diff(xj) <= MB_SIZE && yi.abs_diff(yj) <= MB_SIZE
}

pub fn diagonal_dominance_stats(
    fe: &ToyFeatureExtractor,
    images: &[ImagePlane],
    qps: &[i32],
) -> Result<DominanceSummary> {
    let s = diagonal_dominance_samples(fe, images, qps)?;
    let none = || Error::domain("not enough nonzero residual blocks for statistics");
    Ok(DominanceSummary {
        diagonal: Quantiles::of(&s.diagonal).ok_or_else(none)?,
        off_diagonal: Quantiles::of(&s.off_diagonal).ok_or_else(none)?,
        off_diagonal_adjacent: Quantiles::of(&s.off_diagonal_adjacent).ok_or_else(none)?,
        n_blocks: s.n_blocks,
    })
}
