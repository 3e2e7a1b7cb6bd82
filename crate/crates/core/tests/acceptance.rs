//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `IDSE_BLESS=1` to (re)write the golden bitstream fixture.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use idse::codec::{decode, enumerate_candidates};
use idse::eval::{
    default_rd_configs, experiment_diag_dominance, experiment_rd_sweep, experiment_taylor_convergence, flop_model,
    synthetic_corpus, QualityMetric, CORPUS_IMAGES, CORPUS_SIDE, DOMINANCE_IMAGES, DOMINANCE_SIDE,
    EXPERIMENT_SKETCH_ROWS, RD_QPS, TAYLOR_QPS,
};
use idse::grid::{Block, BlockGrid, MB_PIXELS};
use idse::linalg::{norm_sq, DenseMatrix};
use idse::rdo::{
    compute_lambda, encode_with_rdo, fd_rdo_reference, sse_lambda, BlockMetricState, Domain, MetricConfig,
    DOMINANCE_QPS,
};
use idse::sketch::{draw_sketch, jl_dimension, sketch_extractor, SketchMatrix, SketchedJacobian};
use idse::{load_pgm, save_pgm, ImagePlane, Prng, ToyFeatureExtractor};

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> idse::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn noise_image(w: usize, h: usize, seed: u64) -> ImagePlane {
    let mut rng = Prng::new(seed);
    let s = (0..w * h).map(|_| (rng.uniform() * 255.0).round()).collect();
    ImagePlane::new(w, h, s).unwrap()
}

fn flop_reproduction() -> idse::Result<Outcome> {
    let r = flop_model(768.0, 768.0, 224.0, 224.0, 18.0, 4.0)?;
    outcome((r - 24.81).abs() <= 0.01, format!("ratio {r:.4} (target 24.81 +- 0.01)"))
}

fn metric_reduction() -> idse::Result<Outcome> {
    let id = SketchedJacobian::identity(64, 64)?;
    let cfg = MetricConfig::idse().with_alpha(0.0);
    let mut mismatches = 0;
    let mut blocks = 0;
    for k in 0..20 {
        let x = noise_image(64, 64, SEED + k);
        for qp in [27, 33, 39] {
            let a = encode_with_rdo(&x, qp, &MetricConfig::sse(), None)?;
            let b = encode_with_rdo(&x, qp, &cfg, Some(&id))?;
            blocks += a.decision.blocks.len();
            mismatches += a
                .decision
                .candidates()
                .iter()
                .zip(b.decision.candidates())
                .filter(|(p, q)| **p != *q)
                .count();
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over {blocks} block decisions"))
}

fn transform_equivalence() -> idse::Result<Outcome> {
    let mut rng = Prng::new(SEED);
    let mut worst: f64 = 0.0;
    let pairs = 10_000;
    let mut done = 0;
    while done < pairs {
        // one random 16x16 Jacobian and block per 50 candidates drawn
        let n_s = 1 + rng.below(16);
        let j = SketchedJacobian::new(16, 16, n_s, (0..n_s * 256).map(|_| rng.normal()).collect(), 0, "")?;
        let tau = rng.uniform_range(0.0, 2.0);
        let pix = BlockMetricState::new(&j, Domain::Pixel, tau)?;
        let tr = BlockMetricState::new(&j, Domain::Transform, tau)?;
        let block: Block = std::array::from_fn(|_| (rng.uniform() * 255.0).round());
        let set = enumerate_candidates(&block, 20 + rng.below(25) as i32);
        for _ in 0..50 {
            let c = &set.candidates[rng.below(set.candidates.len())];
            let (a, b) = (pix.candidate_idse(0, &set, c), tr.candidate_idse(0, &set, c));
            if a > 0.0 {
                worst = worst.max((a - b).abs() / a);
            } else {
                worst = worst.max(b.abs());
            }
            done += 1;
        }
    }
    outcome(worst <= 1e-9, format!("max relative difference {worst:.3e} over {pairs} pairs"))
}

fn sketch_unbiasedness() -> idse::Result<Outcome> {
    let mut rng = Prng::new(SEED);
    let mut worst_exact: f64 = 0.0;
    for n_f in 1..=12 {
        let v: Vec<f64> = (0..n_f).map(|_| rng.normal()).collect();
        let mut total = 0.0;
        for bits in 0..(1u64 << n_f) {
            total += norm_sq(&SketchMatrix::from_sign_bits(1, n_f, bits)?.apply(&v));
        }
        let mean = total / (1u64 << n_f) as f64;
        worst_exact = worst_exact.max((mean - norm_sq(&v)).abs() / norm_sq(&v));
    }
    let v: Vec<f64> = (0..64).map(|_| rng.normal()).collect();
    let mut sum = 0.0;
    let draws = 10_000;
    let mut prng = Prng::new(SEED + 1);
    for _ in 0..draws {
        sum += norm_sq(&draw_sketch(8, v.len(), &mut prng)?.apply(&v));
    }
    let mc = (sum / draws as f64 - norm_sq(&v)).abs() / norm_sq(&v);
    outcome(
        worst_exact <= 1e-12 && mc <= 0.02,
        format!("enumeration max rel err {worst_exact:.2e}; Monte Carlo n_s=8 rel err {:.3}%", mc * 100.0),
    )
}

fn jl_concentration() -> idse::Result<Outcome> {
    let n_s = jl_dimension(18, 0.3, 1.0)?;
    // 19-vector family: J^(i) e_i(theta) for the 18 candidates of one block,
    // plus J^(i) x_i, with the exact conv Jacobian of a 16x16 image.
    let x = synthetic_corpus(1, 16, 16, SEED)?.remove(0);
    let fe = ToyFeatureExtractor::conv_relu_conv(16, 16)?;
    let j = fe.exact_jacobian(&x)?;
    let block: Block = x.samples().try_into().expect("one macroblock");
    let set = enumerate_candidates(&block, 33);
    let mut family: Vec<Vec<f64>> = set
        .candidates
        .iter()
        .map(|c| {
            let e: Vec<f64> = c.recon.iter().zip(&block).map(|(r, o)| r - o).collect();
            j.matvec(&e)
        })
        .collect();
    family.push(j.matvec(x.samples()));
    let family: Vec<Vec<f64>> = family.into_iter().filter(|v| norm_sq(v) > 0.0).collect();
    let target = 10_000;
    let mut prng = Prng::new(SEED);
    let (mut outside_sq, mut outside_norm, mut n) = (0usize, 0usize, 0usize);
    while n < target {
        let s = draw_sketch(n_s, j.rows(), &mut prng)?;
        for v in &family {
            if n == target {
                break;
            }
            let r = norm_sq(&s.apply(v)) / norm_sq(v);
            if !(0.7..=1.3).contains(&r) {
                outside_sq += 1;
            }
            if !(0.7..=1.3).contains(&r.sqrt()) {
                outside_norm += 1;
            }
            n += 1;
        }
    }
    let frac = outside_sq as f64 / n as f64;
    outcome(
        frac <= 0.05,
        format!(
            "n_s={n_s}; squared-norm ratios outside [0.7,1.3]: {:.2}% (limit 5%); [norm ratios: {:.2}%]",
            frac * 100.0,
            outside_norm as f64 / n as f64 * 100.0
        ),
    )
}

fn oracle_equivalence() -> idse::Result<Outcome> {
    let (mut exact_mismatch, mut agree, mut total) = (0, 0, 0);
    let cfg = MetricConfig::idse().with_alpha(0.0);
    for k in 0..10u64 {
        let x = synthetic_corpus(1, 32, 32, SEED + 100 + k)?.remove(0);
        let fe = ToyFeatureExtractor::block_linear(32, 32, 16, SEED + k)?;
        let full = SketchedJacobian::from_full(32, 32, fe.exact_jacobian(&x)?, "full")?;
        let sketched = sketch_extractor(&fe, &x, 8, SEED + 200 + k)?;
        for qp in RD_QPS {
            let enc = encode_with_rdo(&x, qp, &cfg, Some(&full))?;
            let lambda = enc.decision.lambda;
            let reference = fd_rdo_reference(&x, qp, &fe, lambda)?;
            let sk = encode_with_rdo(&x, qp, &cfg.clone().with_lambda(lambda), Some(&sketched))?;
            for (i, r) in reference.iter().enumerate() {
                total += 1;
                exact_mismatch += usize::from(r.candidate != enc.decision.blocks[i].candidate);
                agree += usize::from(r.candidate == sk.decision.blocks[i].candidate);
            }
        }
    }
    let frac = agree as f64 / total as f64;
    outcome(
        exact_mismatch == 0 && frac >= 0.75,
        format!(
            "full Jacobian: {exact_mismatch} mismatches / {total}; n_s=8: {:.1}% agreement (need >= 75%)",
            frac * 100.0
        ),
    )
}

fn taylor_convergence() -> idse::Result<Outcome> {
    let images = synthetic_corpus(CORPUS_IMAGES, CORPUS_SIDE, CORPUS_SIDE, SEED)?;
    let fe = ToyFeatureExtractor::conv_relu_conv(CORPUS_SIDE, CORPUS_SIDE)?;
    let t = experiment_taylor_convergence(&fe, &images, &TAYLOR_QPS, EXPERIMENT_SKETCH_ROWS, SEED)?;
    let gaps: Vec<f64> = t.rows.iter().map(|r| r.rel_gap_sketched).collect();
    let exact: Vec<f64> = t.rows.iter().map(|r| r.rel_gap_exact).collect();
    let of_means: Vec<f64> = t.rows.iter().map(|r| r.rel_gap_of_means).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" -> ");
    outcome(
        decreasing,
        format!(
            "sketched (n_s=8) mean |FD-IDSE|/FD over QP {TAYLOR_QPS:?}: {}; [|mean FD - mean IDSE|/mean FD: {}; exact-Jacobian block IDSE: {}]",
            fmt(&gaps),
            fmt(&of_means),
            fmt(&exact)
        ),
    )
}

fn diagonal_dominance() -> idse::Result<Outcome> {
    let images = synthetic_corpus(DOMINANCE_IMAGES, DOMINANCE_SIDE, DOMINANCE_SIDE, SEED)?;
    let fe = ToyFeatureExtractor::blur_down(DOMINANCE_SIDE, DOMINANCE_SIDE)?;
    let (s, _) = experiment_diag_dominance(&fe, &images, &DOMINANCE_QPS, SEED)?;
    let distinct = DOMINANCE_IMAGES * BlockGrid::new(DOMINANCE_SIDE, DOMINANCE_SIDE)?.n_blocks();
    let ratio = s.adjacent_ratio();
    outcome(
        ratio >= 10.0,
        format!(
            "{distinct} blocks x {} QPs; median diag {:.3e} / median |off| (adjacent pairs) {:.3e} = {ratio:.1}x; all pairs median |off| {:.3e}",
            DOMINANCE_QPS.len(),
            s.diagonal.median,
            s.off_diagonal_adjacent.median,
            s.off_diagonal.median
        ),
    )
}

fn rd_direction() -> idse::Result<Outcome> {
    let images = synthetic_corpus(CORPUS_IMAGES, CORPUS_SIDE, CORPUS_SIDE, SEED)?;
    let fe = ToyFeatureExtractor::conv_relu_conv(CORPUS_SIDE, CORPUS_SIDE)?;
    let s = experiment_rd_sweep(&fe, &images, &default_rd_configs(), &RD_QPS, EXPERIMENT_SKETCH_ROWS, SEED)?;
    let bd = |m| s.bd_for(1, m).map(|b| b.mean).unwrap_or(f64::NAN);
    let (fd, wmse, psnr, idse) = (
        bd(QualityMetric::FeatureDistance),
        bd(QualityMetric::WeightedMse),
        bd(QualityMetric::Psnr),
        bd(QualityMetric::Idse),
    );
    outcome(
        fd < 0.0 && wmse < 0.0 && psnr >= 0.0,
        format!("BD-rate IDSE vs SSE: FD {fd:+.3}%, wMSE {wmse:+.3}%, PSNR {psnr:+.3}% [IDSE {idse:+.3}%]"),
    )
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn closed_loop() -> idse::Result<Outcome> {
    let mut rng = Prng::new(SEED);
    let mut failures = 0;
    for t in 0..50u64 {
        let (w, h) = (8 + rng.below(57), 8 + rng.below(57));
        let x = synthetic_corpus(1, w, h, SEED + 1000 + t)?.remove(0);
        let qp = rng.below(52) as i32;
        let enc = if rng.uniform() < 0.5 {
            encode_with_rdo(&x, qp, &MetricConfig::sse(), None)?
        } else {
            let fe = ToyFeatureExtractor::by_name(["blur_down", "conv_relu_conv"][rng.below(2)], x.width(), x.height())?;
            let j = sketch_extractor(&fe, &x, 1 + rng.below(16), t)?;
            let cfg = MetricConfig::idse().with_alpha(rng.uniform_range(0.0, 2.0));
            encode_with_rdo(&x, qp, &cfg, Some(&j))?
        };
        let dec = decode(&enc.bitstream)?;
        let same = dec.samples().iter().zip(enc.reconstruction.samples()).all(|(a, b)| a.to_bits() == b.to_bits())
            && dec.same_geometry(&enc.reconstruction);
        failures += usize::from(!same);
    }
    let dir = fixture_dir();
    let fixture = dir.join("fixture.pgm");
    let golden = dir.join("golden_sse_qp30.ids");
    if std::env::var_os("IDSE_BLESS").is_some() {
        std::fs::create_dir_all(&dir)?;
        save_pgm(&fixture, &synthetic_corpus(1, 40, 24, SEED)?.remove(0))?;
        let x = load_pgm(&fixture)?;
        std::fs::write(&golden, encode_with_rdo(&x, 30, &MetricConfig::sse(), None)?.bitstream)?;
    }
    let x = load_pgm(&fixture)?;
    let bytes = encode_with_rdo(&x, 30, &MetricConfig::sse(), None)?.bitstream;
    let expected = std::fs::read(&golden)?;
    let golden_ok = bytes == expected;
    outcome(
        failures == 0 && golden_ok,
        format!(
            "{failures}/50 closed-loop mismatches; golden bitstream ({} bytes) {}",
            expected.len(),
            if golden_ok { "byte-identical" } else { "DIFFERS" }
        ),
    )
}

fn lambda_reduction() -> idse::Result<Outcome> {
    let grid = BlockGrid::new(48, 32)?;
    let id = SketchedJacobian::identity(48, 32)?;
    let c = 0.57;
    let mut exact = true;
    let mut vals = Vec::new();
    for qp in [12, 24, 36] {
        let l = compute_lambda(qp, c, &id, &grid, 0.0)?;
        exact &= l == sse_lambda(qp, c) && l == c * ((qp - 12) as f64 / 3.0).exp2();
        vals.push(format!("QP{qp}: {l}"));
    }
    // also a non-identity Jacobian with unit normalized Frobenius term
    let mut rng = Prng::new(SEED);
    let mut m = DenseMatrix::zeros(4, grid.n_pixels());
    for p in 0..grid.n_pixels() {
        // each column a unit vector: per-pixel energy exactly 1
        m.set(rng.below(4), p, if rng.uniform() < 0.5 { -1.0 } else { 1.0 });
    }
    let j = SketchedJacobian::from_full(48, 32, m, "unit")?;
    for qp in [12, 24, 36] {
        exact &= compute_lambda(qp, c, &j, &grid, 0.0)? == sse_lambda(qp, c);
    }
    let _ = MB_PIXELS;
    outcome(exact, format!("exact equality; {}", vals.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> idse::Result<Outcome>); 11] = [
        ("flop_model_reproduction", flop_reproduction),
        ("metric_reduction_identity_jacobian", metric_reduction),
        ("transform_domain_equivalence", transform_equivalence),
        ("sketch_unbiasedness", sketch_unbiasedness),
        ("jl_concentration", jl_concentration),
        ("oracle_rdo_equivalence", oracle_equivalence),
        ("taylor_convergence", taylor_convergence),
        ("diagonal_dominance", diagonal_dominance),
        ("rd_direction_of_effect", rd_direction),
        ("codec_closed_loop", closed_loop),
        ("lambda_reduction", lambda_reduction),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
