//! Quality metrics, BD-rate, the FLOP model, and desk-scale experiments.

mod bdrate;
mod corpus;
mod experiments;
mod flop;
mod quality;

pub use bdrate::{bd_rate, NaturalSpline, RdCurve, RdPoint, MIN_BD_POINTS};
pub use corpus::{synthetic_corpus, synthetic_image};
pub use experiments::{
    blockwise_exact_idse, blockwise_idse, default_rd_configs, experiment_diag_dominance, experiment_rd_sweep,
    experiment_taylor_convergence, run_named_experiment, BdSummary, QualityMetric, RdSweep, RdSweepPoint, Table,
    TaylorConvergence, TaylorRow, CORPUS_IMAGES, CORPUS_SIDE, DOMINANCE_IMAGES, DOMINANCE_SIDE,
    EXPERIMENT_NAMES, EXPERIMENT_SKETCH_ROWS, RD_QPS, TAYLOR_QPS,
};
pub use flop::flop_model;
pub use quality::{distortion_to_quality, mse, output_plane, psnr, psnr_from_mse, PSNR_INFINITE};

#[cfg(test)]
mod tests;
