//! Shared inputs for the criterion benches.

use idse::eval::synthetic_image;
use idse::sketch::sketch_extractor;
use idse::{ImagePlane, SketchedJacobian, ToyFeatureExtractor};

pub const BENCH_SEED: u64 = 7;

/// A seeded synthetic test image of the given padded size.
pub fn image(side: usize) -> ImagePlane {
    synthetic_image(side, side, BENCH_SEED).expect("valid size")
}

/// Conv extractor and its `n_s`-row sketch at `x`.
pub fn conv_sketch(x: &ImagePlane, n_s: usize) -> (ToyFeatureExtractor, SketchedJacobian) {
    let fe = ToyFeatureExtractor::conv_relu_conv(x.width(), x.height()).expect("grid");
    let j = sketch_extractor(&fe, x, n_s, BENCH_SEED).expect("sketch");
    (fe, j)
}
