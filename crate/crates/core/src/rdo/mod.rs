//! Distortion metrics, Lagrangian selection, and the per-block RDO search.

mod dominance;
mod lambda;
mod metric;
mod reference;
mod search;

pub use dominance::{
    diagonal_dominance_samples, diagonal_dominance_stats, quantile_sorted, DominanceSamples, DominanceSummary,
    Quantiles, DOMINANCE_QPS,
};
pub use lambda::{compute_lambda, compute_tau_tilde, normalized_frobenius, qp_scale, sse_lambda};
pub use metric::{
    candidate_sse, idse_block, idse_block_transform, sse, transform_block_slice, BlockMetricState, Domain,
    MetricConfig, DEFAULT_ALPHA, DEFAULT_LAMBDA_C,
};
pub use reference::{fd_rdo_reference, MAX_REFERENCE_SIDE};
pub use search::{encode_with_rdo, rdo_block, BlockDecision, CandidateCost, EncodeStats, Encoded, Encoder, RdoDecision};
