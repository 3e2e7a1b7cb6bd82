use super::search::{rdo_block, BlockDecision, CandidateCost};
use crate::codec::{candidate_params, enumerate_candidates, CandidateSet};
use crate::error::{Error, Result};
use crate::grid::{split_blocks, BlockGrid};
use crate::image::ImagePlane;
use crate::toyfe::ToyFeatureExtractor;

/// Largest image side accepted by [`fd_rdo_reference`].
pub const MAX_REFERENCE_SIDE: usize = 64;

/// Feature-distance RDO by one greedy coordinate sweep.
///
/// Blocks are visited in raster order. For each, all candidates are tried
/// while every other block holds its current reconstruction (the original
/// pixels for blocks not yet visited), and the candidate minimizing
/// `FD(x_hat) + lambda * bits` over the whole image is kept. This is a
/// tractable stand-in for the joint search over all blocks; it is exact when
/// the extractor couples no two blocks. Reconstructions are not clipped, so
/// the error seen by the extractor matches the one the block metrics use.
pub fn fd_rdo_reference(
    x: &ImagePlane,
    qp: i32,
    fe: &ToyFeatureExtractor,
    lambda: f64,
) -> Result<Vec<BlockDecision>> {
    if x.width() > MAX_REFERENCE_SIDE || x.height() > MAX_REFERENCE_SIDE {
        return Err(Error::domain(format!(
            "reference search limited to {MAX_REFERENCE_SIDE}x{MAX_REFERENCE_SIDE}, got {}x{}",
            x.width(),
            x.height()
        )));
    }
    let grid = BlockGrid::for_plane(x);
    let sets: Vec<CandidateSet> = split_blocks(x).iter().map(|b| enumerate_candidates(b, qp)).collect();
    let mut current = x.samples().to_vec();
    let mut out = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let mut costs = Vec::with_capacity(set.candidates.len());
        let mut sse = Vec::with_capacity(set.candidates.len());
        for cand in &set.candidates {
            for (k, p) in grid.pixel_indices(i).enumerate() {
                current[p] = cand.recon[k];
            }
            let trial = x.with_samples(current.clone())?;
            costs.push(CandidateCost {
                distortion: fe.feature_distance(x, &trial)?,
                bits: cand.bits,
            });
            sse.push(cand.recon.iter().zip(&set.pixels).map(|(r, o)| (r - o) * (r - o)).sum::<f64>());
        }
        let best = rdo_block(&costs, lambda)?;
        for (k, p) in grid.pixel_indices(i).enumerate() {
            current[p] = set.candidates[best].recon[k];
        }
        let (dqp, partition) = candidate_params(best);
        out.push(BlockDecision {
            block: i,
            candidate: best,
            partition,
            dqp,
            d_sse: sse[best],
            d_idse: None,
            distortion: costs[best].distortion,
            bits: costs[best].bits,
            cost: costs[best].distortion + lambda * f64::from(costs[best].bits),
        });
    }
    Ok(out)
}
