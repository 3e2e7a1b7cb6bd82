use std::f64::consts::TAU;

use crate::error::Result;
use crate::image::ImagePlane;
use crate::prng::Prng;

/// Deterministic synthetic 8-bit test images: smooth shaded background,
/// flat and striped shapes at random brightness, and sensor-like noise.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> Result<ImagePlane> {
    let mut rng = Prng::new(seed);
    let (w, h) = (width as f64, height as f64);
    let base = rng.uniform_range(40.0, 200.0);
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.uniform_range(10.0, 40.0),
                rng.uniform_range(0.3, 2.0) / w,
                rng.uniform_range(0.3, 2.0) / h,
                rng.uniform_range(0.0, TAU),
            )
        })
        .collect();
    let mut px: Vec<f64> = (0..width * height)
        .map(|p| {
            let (x, y) = ((p % width) as f64, (p / width) as f64);
            base + waves
                .iter()
                .map(|(a, fx, fy, ph)| a * (TAU * (fx * x + fy * y) + ph).cos())
                .sum::<f64>()
        })
        .collect();
    let n_shapes = 2 + rng.below(4);
    for _ in 0..n_shapes {
        let cx = rng.uniform_range(0.0, w);
        let cy = rng.uniform_range(0.0, h);
        let rx = rng.uniform_range(0.08, 0.35) * w;
        let ry = rng.uniform_range(0.08, 0.35) * h;
        let ellipse = rng.uniform() < 0.5;
        let level = rng.uniform_range(0.0, 255.0);
        let stripes = if rng.uniform() < 0.5 {
            Some((
                rng.uniform_range(15.0, 50.0),
                rng.uniform_range(0.05, 0.4),
                rng.uniform_range(0.0, TAU),
            ))
        } else {
            None
        };
        for (p, v) in px.iter_mut().enumerate() {
            let (x, y) = ((p % width) as f64, (p / width) as f64);
            let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
            let inside = if ellipse {
                dx * dx + dy * dy <= 1.0
            } else {
                dx.abs() <= 1.0 && dy.abs() <= 1.0
            };
            if inside {
                *v = level + stripes.map_or(0.0, |(a, f, th)| a * (TAU * f * (x * th.cos() + y * th.sin())).sin());
            }
        }
    }
    let sigma = rng.uniform_range(1.0, 6.0);
    for v in px.iter_mut() {
        *v = (*v + rng.normal() * sigma).round().clamp(0.0, 255.0);
    }
    ImagePlane::from_unpadded(width, height, &px)
}

/// `n` images with seeds `seed, seed + 1, ...`.
pub fn synthetic_corpus(n: usize, width: usize, height: usize, seed: u64) -> Result<Vec<ImagePlane>> {
    (0..n).map(|i| synthetic_image(width, height, seed + i as u64)).collect()
}
