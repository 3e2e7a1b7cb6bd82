use std::fmt::Write as _;

use rayon::prelude::*;

use super::bdrate::{bd_rate, RdCurve};
use super::corpus::synthetic_corpus;
use super::quality::{output_plane, psnr};
use crate::codec::MetricKind;
use crate::error::{Error, Result};
use crate::grid::BlockGrid;
use crate::image::ImagePlane;
use crate::linalg::norm_sq;
use crate::rdo::{diagonal_dominance_stats, encode_with_rdo, DominanceSummary, MetricConfig, DOMINANCE_QPS};
use crate::sketch::{sketch_extractor, ImportanceMap, SketchedJacobian};
use crate::toyfe::ToyFeatureExtractor;

/// QP ladder of the convergence experiment, coarse to fine.
pub const TAYLOR_QPS: [i32; 5] = [47, 43, 39, 35, 31];
/// QP ladder of the RD sweep.
pub const RD_QPS: [i32; 5] = [27, 30, 33, 36, 39];
/// Sketch rows used by the experiments.
pub const EXPERIMENT_SKETCH_ROWS: usize = 8;
/// Corpus size and image side of the default experiments.
pub const CORPUS_IMAGES: usize = 10;
pub const CORPUS_SIDE: usize = 64;
/// Dominance corpus: 4 images of 5x5 macroblocks.
pub const DOMINANCE_IMAGES: usize = 4;
pub const DOMINANCE_SIDE: usize = 80;

/// Stream offset separating evaluation sketches from encoder sketches.
const EVAL_SKETCH_OFFSET: u64 = 0x5EED_0000;

/// Numeric result table with a seed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub seed: u64,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, seed: u64, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            seed,
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn header(&self, out: &mut String) {
        let _ = writeln!(out, "# experiment={}", self.name);
        let _ = writeln!(out, "# seed={}", self.seed);
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        self.header(&mut s);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Whitespace-separated columns with a commented header.
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::new();
        self.header(&mut s);
        let _ = writeln!(s, "# {}", self.columns.join(" "));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.10e}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }
}

fn residual(x: &ImagePlane, recon: &ImagePlane) -> Vec<f64> {
    recon.samples().iter().zip(x.samples()).map(|(r, o)| r - o).collect()
}

/// `sum_i ||J_s^(i) e_i||^2` over all macroblocks.
pub fn blockwise_idse(j: &SketchedJacobian, e: &[f64]) -> Result<f64> {
    let grid = j.grid();
    if e.len() != grid.n_pixels() {
        return Err(Error::domain("residual does not match the sketch grid"));
    }
    let mut total = 0.0;
    let mut ei = [0.0; crate::grid::MB_PIXELS];
    for i in 0..grid.n_blocks() {
        for (k, p) in grid.pixel_indices(i).enumerate() {
            ei[k] = e[p];
        }
        total += j.block_slice(&grid, i)?.norm_sq_of_product(&ei);
    }
    Ok(total)
}

/// `sum_i ||J^(i) e_i||^2` with the exact Jacobian of `fe`.
pub fn blockwise_exact_idse(fe: &ToyFeatureExtractor, x: &ImagePlane, e: &[f64]) -> Result<f64> {
    let grid = BlockGrid::for_plane(x);
    let mut total = 0.0;
    for i in 0..grid.n_blocks() {
        let mut ei = vec![0.0; e.len()];
        for p in grid.pixel_indices(i) {
            ei[p] = e[p];
        }
        total += norm_sq(&fe.jvp(x, &ei)?);
    }
    Ok(total)
}

/// One QP of the convergence experiment, averaged over images.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorRow {
    pub qp: i32,
    pub bpp: f64,
    pub fd: f64,
    /// Block-wise IDSE with the sketched Jacobian.
    pub idse_sketched: f64,
    /// Block-wise IDSE with the exact Jacobian.
    pub idse_exact: f64,
    /// `||J e||^2` with the exact Jacobian.
    pub linearized: f64,
    /// Mean over images of `|FD - IDSE_s| / FD`.
    pub rel_gap_sketched: f64,
    /// `|mean FD - mean IDSE_s| / mean FD`.
    pub rel_gap_of_means: f64,
    /// Mean over images of `|FD - IDSE_exact| / FD`.
    pub rel_gap_exact: f64,
    /// Mean over images of `|FD - ||J e||^2| / FD`.
    pub rel_gap_linearized: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaylorConvergence {
    pub seed: u64,
    pub n_s: usize,
    pub rows: Vec<TaylorRow>,
}

impl TaylorConvergence {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            "taylor_convergence",
            self.seed,
            &[
                "qp",
                "bpp",
                "fd",
                "idse_sketched",
                "idse_exact",
                "linearized",
                "rel_gap_sketched",
                "rel_gap_of_means",
                "rel_gap_exact",
                "rel_gap_linearized",
            ],
        );
        t.notes.push(format!("n_s={}", self.n_s));
        t.notes.push("residuals from SSE-RDO; reconstructions unclipped".into());
        for r in &self.rows {
            t.rows.push(vec![
                r.qp as f64,
                r.bpp,
                r.fd,
                r.idse_sketched,
                r.idse_exact,
                r.linearized,
                r.rel_gap_sketched,
                r.rel_gap_of_means,
                r.rel_gap_exact,
                r.rel_gap_linearized,
            ]);
        }
        t
    }
}

/// Compares feature distance with its quadratic surrogates on SSE-RDO
/// residuals across a QP ladder. Image `k` uses the sketch seeded `seed + k`
/// at every QP.
pub fn experiment_taylor_convergence(
    fe: &ToyFeatureExtractor,
    images: &[ImagePlane],
    qps: &[i32],
    n_s: usize,
    seed: u64,
) -> Result<TaylorConvergence> {
    if images.is_empty() {
        return Err(Error::domain("no images"));
    }
    // per image, per qp: (bpp, fd, idse_s, idse_exact, linearized)
    let per_image: Vec<Vec<[f64; 5]>> = images
        .par_iter()
        .enumerate()
        .map(|(k, x)| -> Result<Vec<[f64; 5]>> {
            let j = sketch_extractor(fe, x, n_s, seed + k as u64)?;
            qps.iter()
                .map(|&qp| {
                    let enc = encode_with_rdo(x, qp, &MetricConfig::sse(), None)?;
                    let e = residual(x, &enc.reconstruction);
                    let bpp = enc.stats.payload_bits as f64 / x.n_pixels() as f64;
                    Ok([
                        bpp,
                        fe.feature_distance(x, &enc.reconstruction)?,
                        blockwise_idse(&j, &e)?,
                        blockwise_exact_idse(fe, x, &e)?,
                        norm_sq(&fe.jvp(x, &e)?),
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = images.len() as f64;
    let rows = qps
        .iter()
        .enumerate()
        .map(|(q, &qp)| {
            let vals: Vec<[f64; 5]> = per_image.iter().map(|v| v[q]).collect();
            let mean = |c: usize| vals.iter().map(|v| v[c]).sum::<f64>() / n;
            let rel = |c: usize| vals.iter().map(|v| (v[1] - v[c]).abs() / v[1]).sum::<f64>() / n;
            TaylorRow {
                qp,
                bpp: mean(0),
                fd: mean(1),
                idse_sketched: mean(2),
                idse_exact: mean(3),
                linearized: mean(4),
                rel_gap_sketched: rel(2),
                rel_gap_of_means: (mean(1) - mean(2)).abs() / mean(1),
                rel_gap_exact: rel(3),
                rel_gap_linearized: rel(4),
            }
        })
        .collect();
    Ok(TaylorConvergence { seed, n_s, rows })
}

/// Diagonal-dominance statistics as a table.
pub fn experiment_diag_dominance(
    fe: &ToyFeatureExtractor,
    images: &[ImagePlane],
    qps: &[i32],
    seed: u64,
) -> Result<(DominanceSummary, Table)> {
    let s = diagonal_dominance_stats(fe, images, qps)?;
    let mut t = Table::new("diag_dominance", seed, &["population", "count", "p15", "median", "p85"]);
    t.notes.push(format!("extractor={} qps={qps:?} blocks={}", fe.name(), s.n_blocks));
    t.notes.push("population: 0=diagonal 1=off-diagonal(all pairs) 2=off-diagonal(adjacent pairs)".into());
    for (k, q) in [s.diagonal, s.off_diagonal, s.off_diagonal_adjacent].iter().enumerate() {
        t.rows.push(vec![k as f64, q.count as f64, q.p15, q.median, q.p85]);
    }
    Ok((s, t))
}

/// Quality axes of the RD sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QualityMetric {
    Psnr,
    FeatureDistance,
    Idse,
    WeightedMse,
}

impl QualityMetric {
    pub const ALL: [QualityMetric; 4] = [
        QualityMetric::Psnr,
        QualityMetric::FeatureDistance,
        QualityMetric::Idse,
        QualityMetric::WeightedMse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QualityMetric::Psnr => "psnr",
            QualityMetric::FeatureDistance => "fd",
            QualityMetric::Idse => "idse",
            QualityMetric::WeightedMse => "wmse",
        }
    }
}

/// One encode of the RD sweep, measured on the 8-bit output.
#[derive(Clone, Debug, PartialEq)]
pub struct RdSweepPoint {
    pub image: usize,
    pub config: usize,
    pub qp: i32,
    /// Payload bits per pixel.
    pub bpp: f64,
    pub psnr: f64,
    pub fd: f64,
    /// Block-wise IDSE under an independent evaluation sketch.
    pub idse: f64,
    /// Importance-weighted MSE with exact column-norm weights.
    pub wmse: f64,
}

impl RdSweepPoint {
    fn quality(&self, m: QualityMetric) -> (bool, f64) {
        match m {
            QualityMetric::Psnr => (false, self.psnr),
            QualityMetric::FeatureDistance => (true, self.fd),
            QualityMetric::Idse => (true, self.idse),
            QualityMetric::WeightedMse => (true, self.wmse),
        }
    }
}

/// BD-rate of one configuration against the first, per quality metric.
#[derive(Clone, Debug, PartialEq)]
pub struct BdSummary {
    pub config: usize,
    pub metric: QualityMetric,
    pub per_image: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct RdSweep {
    pub seed: u64,
    pub labels: Vec<String>,
    pub points: Vec<RdSweepPoint>,
    pub bd: Vec<BdSummary>,
}

impl RdSweep {
    pub fn bd_for(&self, config: usize, metric: QualityMetric) -> Option<&BdSummary> {
        self.bd.iter().find(|b| b.config == config && b.metric == metric)
    }

    pub fn curve(&self, image: usize, config: usize, metric: QualityMetric) -> Result<RdCurve> {
        let pts: Vec<&RdSweepPoint> =
            self.points.iter().filter(|p| p.image == image && p.config == config).collect();
        let rates: Vec<f64> = pts.iter().map(|p| p.bpp).collect();
        let label = format!("{}/{}/{}", self.labels[config], image, metric.name());
        match pts.first().map(|p| p.quality(metric).0) {
            Some(true) => {
                let d: Vec<f64> = pts.iter().map(|p| p.quality(metric).1).collect();
                RdCurve::from_distortions(label, &rates, &d)
            }
            _ => {
                let q: Vec<f64> = pts.iter().map(|p| p.quality(metric).1).collect();
                RdCurve::from_pairs(label, &rates, &q)
            }
        }
    }

    pub fn points_table(&self) -> Table {
        let mut t = Table::new(
            "rd_sweep",
            self.seed,
            &["image", "config", "qp", "bpp", "psnr", "fd", "idse", "wmse"],
        );
        for (k, l) in self.labels.iter().enumerate() {
            t.notes.push(format!("config {k} = {l}"));
        }
        for p in &self.points {
            t.rows.push(vec![
                p.image as f64,
                p.config as f64,
                p.qp as f64,
                p.bpp,
                p.psnr,
                p.fd,
                p.idse,
                p.wmse,
            ]);
        }
        t
    }

    pub fn bd_table(&self) -> Table {
        let mut t = Table::new("rd_sweep_bdrate", self.seed, &["config", "metric", "bd_rate_percent"]);
        t.notes.push(format!("reference = config 0 ({})", self.labels[0]));
        t.notes.push("metric: 0=psnr 1=fd 2=idse 3=wmse; mean of per-image BD-rates".into());
        for b in &self.bd {
            let m = QualityMetric::ALL.iter().position(|m| *m == b.metric).unwrap_or(0);
            t.rows.push(vec![b.config as f64, m as f64, b.mean]);
        }
        t
    }
}

/// Encodes every image with every configuration across `qps` and reports
/// BD-rates against the first configuration. IDSE configurations use the
/// sketch of `fe` seeded `seed + k` for image `k`.
pub fn experiment_rd_sweep(
    fe: &ToyFeatureExtractor,
    images: &[ImagePlane],
    configs: &[(String, MetricConfig)],
    qps: &[i32],
    n_s: usize,
    seed: u64,
) -> Result<RdSweep> {
    if configs.is_empty() || images.is_empty() {
        return Err(Error::domain("RD sweep needs images and configurations"));
    }
    let per_image: Vec<Vec<RdSweepPoint>> = images
        .par_iter()
        .enumerate()
        .map(|(k, x)| -> Result<Vec<RdSweepPoint>> {
            let j = sketch_extractor(fe, x, n_s, seed + k as u64)?;
            let j_eval = sketch_extractor(fe, x, n_s, seed + EVAL_SKETCH_OFFSET + k as u64)?;
            let weights = ImportanceMap::new(x.width(), x.height(), fe.column_norms_sq(x)?)?;
            let mut out = Vec::new();
            for (c, (_, cfg)) in configs.iter().enumerate() {
                let jac = (cfg.kind == MetricKind::Idse).then_some(&j);
                for &qp in qps {
                    let enc = encode_with_rdo(x, qp, cfg, jac)?;
                    let y = output_plane(&enc.reconstruction);
                    let e = residual(x, &y);
                    out.push(RdSweepPoint {
                        image: k,
                        config: c,
                        qp,
                        bpp: enc.stats.payload_bits as f64 / x.n_pixels() as f64,
                        psnr: psnr(x, &y)?,
                        fd: fe.feature_distance(x, &y)?,
                        idse: blockwise_idse(&j_eval, &e)?,
                        wmse: weights.weighted_mse(x, &y)?,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut sweep = RdSweep {
        seed,
        labels: configs.iter().map(|c| c.0.clone()).collect(),
        points: per_image.into_iter().flatten().collect(),
        bd: Vec::new(),
    };
    for c in 1..configs.len() {
        for m in QualityMetric::ALL {
            let per_image = (0..images.len())
                .map(|k| bd_rate(&sweep.curve(k, 0, m)?, &sweep.curve(k, c, m)?))
                .collect::<Result<Vec<f64>>>()?;
            let mean = per_image.iter().sum::<f64>() / per_image.len() as f64;
            sweep.bd.push(BdSummary {
                config: c,
                metric: m,
                per_image,
                mean,
            });
        }
    }
    Ok(sweep)
}

/// Named experiments with their default corpora, as written by the CLI.
pub const EXPERIMENT_NAMES: [&str; 3] = ["taylor_convergence", "diag_dominance", "rd_sweep"];

/// Runs a named experiment; returns `(file name, contents)` pairs.
pub fn run_named_experiment(name: &str, seed: u64) -> Result<Vec<(String, String)>> {
    match name {
        "taylor_convergence" => {
            let images = synthetic_corpus(CORPUS_IMAGES, CORPUS_SIDE, CORPUS_SIDE, seed)?;
            let fe = ToyFeatureExtractor::conv_relu_conv(CORPUS_SIDE, CORPUS_SIDE)?;
            let t = experiment_taylor_convergence(&fe, &images, &TAYLOR_QPS, EXPERIMENT_SKETCH_ROWS, seed)?
                .to_table();
            Ok(vec![
                ("taylor_convergence.csv".into(), t.to_csv()),
                ("taylor_convergence.dat".into(), t.to_gnuplot()),
            ])
        }
        "diag_dominance" => {
            let images = synthetic_corpus(DOMINANCE_IMAGES, DOMINANCE_SIDE, DOMINANCE_SIDE, seed)?;
            let fe = ToyFeatureExtractor::blur_down(DOMINANCE_SIDE, DOMINANCE_SIDE)?;
            let (_, t) = experiment_diag_dominance(&fe, &images, &DOMINANCE_QPS, seed)?;
            Ok(vec![
                ("diag_dominance.csv".into(), t.to_csv()),
                ("diag_dominance.dat".into(), t.to_gnuplot()),
            ])
        }
        "rd_sweep" => {
            let images = synthetic_corpus(CORPUS_IMAGES, CORPUS_SIDE, CORPUS_SIDE, seed)?;
            let fe = ToyFeatureExtractor::conv_relu_conv(CORPUS_SIDE, CORPUS_SIDE)?;
            let configs = default_rd_configs();
            let s = experiment_rd_sweep(&fe, &images, &configs, &RD_QPS, EXPERIMENT_SKETCH_ROWS, seed)?;
            let (p, b) = (s.points_table(), s.bd_table());
            Ok(vec![
                ("rd_sweep.csv".into(), p.to_csv()),
                ("rd_sweep.dat".into(), p.to_gnuplot()),
                ("rd_sweep_bdrate.csv".into(), b.to_csv()),
            ])
        }
        _ => Err(Error::domain(format!(
            "unknown experiment '{name}' (expected one of {EXPERIMENT_NAMES:?})"
        ))),
    }
}

/// SSE-RDO reference followed by IDSE-RDO with default parameters.
pub fn default_rd_configs() -> Vec<(String, MetricConfig)> {
    vec![
        ("sse".to_string(), MetricConfig::sse()),
        ("idse".to_string(), MetricConfig::idse()),
    ]
}
