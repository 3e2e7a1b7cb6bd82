use std::fmt::Write as _;

use rayon::prelude::*;

use super::lambda::{compute_lambda, compute_tau_tilde, sse_lambda};
use super::metric::{candidate_sse, BlockMetricState, MetricConfig};
use crate::codec::bitstream::{mux, reconstruct_plane, BitstreamHeader, MacroblockChoice, MetricKind, MAX_QP};
use crate::codec::{candidate_params, enumerate_candidates, Partition};
use crate::error::{Error, Result};
use crate::eval::{output_plane, psnr};
use crate::grid::{split_blocks, BlockGrid};
use crate::image::ImagePlane;
use crate::sketch::SketchedJacobian;
use crate::toyfe::ToyFeatureExtractor;

/// Distortion and rate of one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateCost {
    pub distortion: f64,
    pub bits: u32,
}

/// Index minimizing `d + lambda * bits`. Ties go to fewer bits, then to the
/// lower index.
pub fn rdo_block(costs: &[CandidateCost], lambda: f64) -> Result<usize> {
    if costs.is_empty() {
        return Err(Error::domain("no RDO candidates"));
    }
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (i, c) in costs.iter().enumerate() {
        let cost = lagrangian(c, lambda);
        let better = cost < best_cost || (cost == best_cost && c.bits < costs[best].bits);
        if better {
            best = i;
            best_cost = cost;
        }
    }
    Ok(best)
}

fn lagrangian(c: &CandidateCost, lambda: f64) -> f64 {
    if lambda.is_infinite() {
        // pure rate; distortion only breaks ties through the index order
        return c.bits as f64;
    }
    c.distortion + lambda * c.bits as f64
}

/// The choice made for one macroblock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockDecision {
    pub block: usize,
    pub candidate: usize,
    pub partition: Partition,
    pub dqp: i32,
    pub d_sse: f64,
    /// Regularized IDSE, when a Jacobian was available.
    pub d_idse: Option<f64>,
    /// Distortion under the configured metric.
    pub distortion: f64,
    pub bits: u32,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdoDecision {
    pub lambda: f64,
    pub tau: f64,
    pub blocks: Vec<BlockDecision>,
}

impl RdoDecision {
    pub fn candidates(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.candidate).collect()
    }

    pub fn total_bits(&self) -> u64 {
        self.blocks.iter().map(|b| u64::from(b.bits)).sum()
    }

    /// One line per block: `block,partition,dqp,d_sse,d_idse,bits,cost`.
    /// `d_idse` is empty when no Jacobian was used.
    pub fn to_records(&self) -> String {
        let mut s = String::from("# block,partition,dqp,d_sse,d_idse,bits,cost\n");
        for b in &self.blocks {
            let idse = b.d_idse.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{},{},{:.6}",
                b.block,
                b.partition.name(),
                b.dqp,
                b.d_sse,
                idse,
                b.bits,
                b.cost
            );
        }
        s
    }
}

/// Frame-level summary of one encode.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodeStats {
    pub metric: MetricKind,
    pub qp: i32,
    pub lambda: f64,
    pub tau: f64,
    /// Macroblock payload bits (side info included, header excluded).
    pub payload_bits: u64,
    pub file_bytes: usize,
    /// File bits per original pixel.
    pub bpp: f64,
    pub psnr: f64,
    /// Feature distance of the 8-bit output, when an extractor was supplied.
    pub feature_distance: Option<f64>,
}

impl EncodeStats {
    pub fn to_records(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# metric={}", self.metric.name());
        let _ = writeln!(s, "# qp={}", self.qp);
        let _ = writeln!(s, "# lambda={}", self.lambda);
        let _ = writeln!(s, "# tau={}", self.tau);
        let _ = writeln!(s, "# payload_bits={}", self.payload_bits);
        let _ = writeln!(s, "# file_bytes={}", self.file_bytes);
        let _ = writeln!(s, "# bpp={}", self.bpp);
        let _ = writeln!(s, "# psnr={}", self.psnr);
        if let Some(fd) = self.feature_distance {
            let _ = writeln!(s, "# feature_distance={fd}");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub bitstream: Vec<u8>,
    pub decision: RdoDecision,
    pub stats: EncodeStats,
    /// Padded, unclipped reconstruction; identical to what the decoder produces.
    pub reconstruction: ImagePlane,
}

/// RDO encoder for one metric configuration.
#[derive(Clone, Debug)]
pub struct Encoder<'a> {
    config: MetricConfig,
    jacobian: Option<&'a SketchedJacobian>,
    extractor: Option<&'a ToyFeatureExtractor>,
}

impl<'a> Encoder<'a> {
    pub fn new(config: MetricConfig) -> Self {
        Encoder {
            config,
            jacobian: None,
            extractor: None,
        }
    }

    pub fn with_jacobian(mut self, j: &'a SketchedJacobian) -> Self {
        self.jacobian = Some(j);
        self
    }

    /// Adds the exact feature distance of the output to the stats.
    pub fn with_extractor(mut self, fe: &'a ToyFeatureExtractor) -> Self {
        self.extractor = Some(fe);
        self
    }

    pub fn config(&self) -> &MetricConfig {
        &self.config
    }

    /// `(tau, lambda)` this encoder uses on `x` at `qp`.
    pub fn parameters(&self, x: &ImagePlane, qp: i32) -> Result<(f64, f64)> {
        self.config.validate()?;
        let grid = BlockGrid::for_plane(x);
        match self.config.kind {
            MetricKind::Sse => {
                let lambda = self.config.lambda.unwrap_or_else(|| sse_lambda(qp, self.config.lambda_c));
                Ok((0.0, lambda))
            }
            MetricKind::Idse => {
                let j = self.require_jacobian(x)?;
                let tau = if self.config.alpha == 0.0 {
                    0.0
                } else {
                    let tau_tilde = match self.config.tau_tilde {
                        Some(t) => t,
                        None => compute_tau_tilde(j)?,
                    };
                    self.config.alpha * tau_tilde
                };
                let lambda = match self.config.lambda {
                    Some(l) => l,
                    None => compute_lambda(qp, self.config.lambda_c, j, &grid, tau)?,
                };
                Ok((tau, lambda))
            }
        }
    }

    fn require_jacobian(&self, x: &ImagePlane) -> Result<&'a SketchedJacobian> {
        let j = self
            .jacobian
            .ok_or_else(|| Error::domain("the idse metric needs a sketched Jacobian"))?;
        j.check_grid(x)?;
        Ok(j)
    }

    pub fn encode(&self, x: &ImagePlane, qp: i32) -> Result<Encoded> {
        if !(0..=i32::from(MAX_QP)).contains(&qp) {
            return Err(Error::domain(format!("qp {qp} outside [0, {MAX_QP}]")));
        }
        let (tau, lambda) = self.parameters(x, qp)?;
        // The metric state carries the Jacobian even for SSE so d_idse can be reported.
        let state = match self.jacobian {
            Some(j) => {
                j.check_grid(x)?;
                Some(BlockMetricState::new(j, self.config.domain, tau)?)
            }
            None => None,
        };
        let kind = self.config.kind;
        let blocks = split_blocks(x);
        let results: Vec<(BlockDecision, MacroblockChoice)> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, block)| {
                let set = enumerate_candidates(block, qp);
                let evaluated: Vec<(f64, Option<f64>)> = set
                    .candidates
                    .iter()
                    .map(|c| (candidate_sse(&set, c), state.as_ref().map(|s| s.candidate_idse(i, &set, c))))
                    .collect();
                let costs: Vec<CandidateCost> = set
                    .candidates
                    .iter()
                    .zip(&evaluated)
                    .map(|(c, &(d_sse, d_idse))| CandidateCost {
                        distortion: match kind {
                            MetricKind::Sse => d_sse,
                            MetricKind::Idse => d_idse.expect("idse state present"),
                        },
                        bits: c.bits,
                    })
                    .collect();
                let best = rdo_block(&costs, lambda).expect("18 candidates");
                let (dqp, partition) = candidate_params(best);
                let cand = &set.candidates[best];
                let decision = BlockDecision {
                    block: i,
                    candidate: best,
                    partition,
                    dqp,
                    d_sse: evaluated[best].0,
                    d_idse: evaluated[best].1,
                    distortion: costs[best].distortion,
                    bits: cand.bits,
                    cost: lagrangian(&costs[best], lambda),
                };
                let choice = MacroblockChoice {
                    partition,
                    dqp,
                    levels: cand.levels.clone(),
                };
                (decision, choice)
            })
            .collect();
        let (decisions, choices): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let header = BitstreamHeader::for_plane(x, qp as u8, kind);
        let bitstream = mux(&header, &choices)?;
        let reconstruction = reconstruct_plane(&header, &choices)?;
        let output = output_plane(&reconstruction);
        let feature_distance = match self.extractor {
            Some(fe) => Some(fe.feature_distance(x, &output)?),
            None => None,
        };
        let decision = RdoDecision {
            lambda,
            tau,
            blocks: decisions,
        };
        let n_orig = (x.orig_width() * x.orig_height()) as f64;
        let stats = EncodeStats {
            metric: kind,
            qp,
            lambda,
            tau,
            payload_bits: decision.total_bits(),
            file_bytes: bitstream.len(),
            bpp: (bitstream.len() * 8) as f64 / n_orig,
            psnr: psnr(x, &output)?,
            feature_distance,
        };
        Ok(Encoded {
            bitstream,
            decision,
            stats,
            reconstruction,
        })
    }
}

/// Encodes `x` at `qp`; `j` is required for the IDSE metric.
pub fn encode_with_rdo(
    x: &ImagePlane,
    qp: i32,
    config: &MetricConfig,
    j: Option<&SketchedJacobian>,
) -> Result<Encoded> {
    let mut enc = Encoder::new(config.clone());
    if let Some(j) = j {
        enc = enc.with_jacobian(j);
    }
    enc.encode(x, qp)
}
