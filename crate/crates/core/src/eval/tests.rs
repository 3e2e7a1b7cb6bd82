use super::*;
use crate::image::ImagePlane;
use crate::prng::Prng;
use crate::toyfe::ToyFeatureExtractor;
use proptest::prelude::*;

fn smooth_curve(label: &str, scale: f64) -> RdCurve {
    let rates = [0.1, 0.2, 0.4, 0.8, 1.6];
    let pts = rates
        .iter()
        .map(|&r: &f64| RdPoint {
            rate: r * scale,
            quality: 30.0 + 6.0 * r.log2(),
        })
        .collect();
    RdCurve::new(label, pts).unwrap()
}

#[test]
fn psnr_examples() {
    let x = ImagePlane::filled(16, 16, 100.0).unwrap();
    assert_eq!(psnr(&x, &x).unwrap(), PSNR_INFINITE);
    let y = ImagePlane::filled(16, 16, 101.0).unwrap();
    assert!((psnr(&x, &y).unwrap() - 48.1308).abs() < 1e-4);
    assert!((psnr_from_mse(65025.0)).abs() < 1e-12);
}

#[test]
fn psnr_uses_original_area_only() {
    let x = ImagePlane::from_unpadded(10, 10, &[50.0; 100]).unwrap();
    let mut s = x.samples().to_vec();
    // change only padding
    s[15] = 0.0;
    let y = x.with_samples(s).unwrap();
    assert_eq!(psnr(&x, &y).unwrap(), PSNR_INFINITE);
}

#[test]
fn output_plane_rounds_and_clips() {
    let x = ImagePlane::new(16, 16, (0..256).map(|i| i as f64 * 1.3 - 30.2).collect()).unwrap();
    let y = output_plane(&x);
    assert!(y.samples().iter().all(|v| (0.0..=255.0).contains(v) && v.fract() == 0.0));
}

#[test]
fn bd_rate_examples() {
    let a = smooth_curve("a", 1.0);
    assert!(bd_rate(&a, &a).unwrap().abs() < 1e-12);
    assert!((bd_rate(&a, &smooth_curve("b", 2.0)).unwrap() - 100.0).abs() < 1e-9);
    assert!((bd_rate(&a, &smooth_curve("c", 0.9)).unwrap() + 10.0).abs() < 0.1);
}

#[test]
fn bd_rate_sign_flips_on_swap() {
    let a = smooth_curve("a", 1.0);
    let pts = a
        .points()
        .iter()
        .map(|p| RdPoint {
            rate: p.rate * (0.8 + 0.05 * p.quality.sin()),
            quality: p.quality,
        })
        .collect();
    let b = RdCurve::new("b", pts).unwrap();
    let (ab, ba) = (bd_rate(&a, &b).unwrap(), bd_rate(&b, &a).unwrap());
    assert!(ab < 0.0 && ba > 0.0);
    // log-rate averaging: (1 + ab)(1 + ba) = 1
    assert!(((1.0 + ab / 100.0) * (1.0 + ba / 100.0) - 1.0).abs() < 1e-9);
    assert!((ab + ba).abs() < 0.5 + (ab * ba / 100.0).abs());
}

#[test]
fn bd_rate_errors() {
    let a = smooth_curve("a", 1.0);
    let short = RdCurve::from_pairs("s", &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).unwrap();
    assert!(bd_rate(&a, &short).is_err());
    let far = RdCurve::from_pairs("f", &[0.1, 0.2, 0.3, 0.4], &[100.0, 101.0, 102.0, 103.0]).unwrap();
    assert!(bd_rate(&a, &far).is_err());
    assert!(RdCurve::from_pairs("z", &[0.0, 0.1], &[1.0, 2.0]).is_err());
}

#[test]
fn spline_interpolates_and_integrates() {
    let x = vec![0.0, 1.0, 2.5, 3.0, 5.0];
    let y = vec![1.0, -1.0, 2.0, 0.5, 3.0];
    let s = NaturalSpline::new(x.clone(), y.clone()).unwrap();
    for (a, b) in x.iter().zip(&y) {
        assert!((s.eval(*a) - b).abs() < 1e-12);
    }
    // composite Simpson oracle on a fine grid
    let (lo, hi, n) = (0.3, 4.7, 20000);
    let h = (hi - lo) / n as f64;
    let mut simpson = s.eval(lo) + s.eval(hi);
    for k in 1..n {
        simpson += s.eval(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    simpson *= h / 3.0;
    assert!((s.integrate(lo, hi) - simpson).abs() < 1e-9);
    // natural end conditions: linear extension has zero curvature at the ends
    let d2 = |t: f64| (s.eval(t + 1e-4) - 2.0 * s.eval(t) + s.eval(t - 1e-4)) / 1e-8;
    assert!(d2(1e-4).abs() < 1e-2);
}

#[test]
fn spline_reproduces_cubic_free_lines() {
    let s = NaturalSpline::new(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, 3.0, 5.0, 9.0]).unwrap();
    assert!((s.eval(3.0) - 7.0).abs() < 1e-12);
    assert!((s.integrate(0.0, 4.0) - 20.0).abs() < 1e-12);
}

#[test]
fn flop_examples() {
    let r = flop_model(768.0, 768.0, 224.0, 224.0, 18.0, 4.0).unwrap();
    assert!((r - 24.81).abs() <= 0.01, "{r}");
    assert!((flop_model(10.0, 10.0, 10.0, 10.0, 8.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
    let a = flop_model(100.0, 50.0, 20.0, 20.0, 18.0, 8.0).unwrap();
    let b = flop_model(200.0, 50.0, 20.0, 20.0, 18.0, 8.0).unwrap();
    assert!((b / a - 2.0).abs() < 1e-15);
    assert!(flop_model(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn corpus_is_deterministic_8bit() {
    let a = synthetic_corpus(3, 40, 24, 5).unwrap();
    let b = synthetic_corpus(3, 40, 24, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);
    assert_eq!((a[0].width(), a[0].height(), a[0].orig_width()), (48, 32, 40));
    assert!(a[0].samples().iter().all(|v| (0.0..=255.0).contains(v) && v.fract() == 0.0));
}

#[test]
fn taylor_identity_fd_equals_idse() {
    let imgs = synthetic_corpus(2, 32, 32, 1).unwrap();
    let fe = ToyFeatureExtractor::identity(32, 32).unwrap();
    let j = crate::sketch::SketchedJacobian::identity(32, 32).unwrap();
    let x = &imgs[0];
    let e: Vec<f64> = (0..1024).map(|i| (i % 7) as f64 - 3.0).collect();
    assert_eq!(blockwise_idse(&j, &e).unwrap(), e.iter().map(|v| v * v).sum::<f64>());
    assert_eq!(blockwise_exact_idse(&fe, x, &e).unwrap(), e.iter().map(|v| v * v).sum::<f64>());
    let t = experiment_taylor_convergence(&fe, &imgs, &[31, 39], 8, 3).unwrap();
    for r in &t.rows {
        assert!(r.rel_gap_exact < 1e-12 && r.rel_gap_linearized < 1e-12);
    }
}

#[test]
fn taylor_block_linear_has_no_gap() {
    let imgs = synthetic_corpus(2, 32, 32, 2).unwrap();
    let fe = ToyFeatureExtractor::block_linear(32, 32, 16, 4).unwrap();
    let t = experiment_taylor_convergence(&fe, &imgs, &[31, 39, 47], 8, 3).unwrap();
    for r in &t.rows {
        assert!(r.rel_gap_exact <= 1e-9 && r.rel_gap_linearized <= 1e-9, "{r:?}");
    }
    let tab = t.to_table();
    assert!(tab.to_csv().starts_with("# experiment=taylor_convergence\n# seed=3\n"));
    assert_eq!(tab.column("qp").unwrap(), vec![31.0, 39.0, 47.0]);
}

#[test]
fn rd_sweep_sse_against_itself_is_zero() {
    let imgs = synthetic_corpus(2, 64, 64, 3).unwrap();
    let fe = ToyFeatureExtractor::blur_down(64, 64).unwrap();
    let cfgs = vec![
        ("a".to_string(), crate::rdo::MetricConfig::sse()),
        ("b".to_string(), crate::rdo::MetricConfig::sse()),
    ];
    let s = experiment_rd_sweep(&fe, &imgs, &cfgs, &RD_QPS, 4, 1).unwrap();
    for b in &s.bd {
        assert!(b.mean.abs() < 1e-12);
    }
    assert_eq!(s.points.len(), 2 * 2 * RD_QPS.len());
}

#[test]
fn unknown_experiment_rejected() {
    assert!(run_named_experiment("nope", 1).is_err());
}

#[test]
fn tables_render() {
    let mut t = Table::new("x", 9, &["a", "b"]);
    t.rows.push(vec![1.0, 2.5]);
    assert_eq!(t.to_csv(), "# experiment=x\n# seed=9\na,b\n1,2.5\n");
    assert!(t.to_gnuplot().contains("# a b\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bd_rate_self_is_zero(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let mut r = 0.05;
        let mut q = 20.0;
        let mut pts = Vec::new();
        for _ in 0..5 {
            r *= rng.uniform_range(1.2, 2.5);
            q += rng.uniform_range(0.5, 4.0);
            pts.push(RdPoint { rate: r, quality: q });
        }
        let c = RdCurve::new("c", pts).unwrap();
        prop_assert!(bd_rate(&c, &c).unwrap().abs() < 1e-9);
    }

    #[test]
    fn bd_rate_uniform_scaling(k in 0.3f64..3.0) {
        let a = smooth_curve("a", 1.0);
        let b = smooth_curve("b", k);
        prop_assert!((bd_rate(&a, &b).unwrap() - (k - 1.0) * 100.0).abs() < 1e-7);
    }
}
