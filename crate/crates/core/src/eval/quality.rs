use crate::error::{Error, Result};
use crate::image::ImagePlane;

/// PSNR reported for identical images.
pub const PSNR_INFINITE: f64 = f64::INFINITY;

/// Reconstruction as delivered: rounded and clipped to 8 bits, same grid.
pub fn output_plane(plane: &ImagePlane) -> ImagePlane {
    let samples = plane.samples().iter().map(|v| v.round().clamp(0.0, 255.0)).collect();
    plane.with_samples(samples).expect("same geometry")
}

/// Mean squared error over the original (uncropped) area.
pub fn mse(x: &ImagePlane, x_hat: &ImagePlane) -> Result<f64> {
    if !x.same_geometry(x_hat) {
        return Err(Error::domain("images differ in geometry"));
    }
    let (w, ow, oh) = (x.width(), x.orig_width(), x.orig_height());
    let (a, b) = (x.samples(), x_hat.samples());
    let mut s = 0.0;
    for y in 0..oh {
        for p in y * w..y * w + ow {
            s += (a[p] - b[p]) * (a[p] - b[p]);
        }
    }
    Ok(s / (ow * oh) as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_INFINITE
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// `10 log10(255^2 / MSE)` over the original area; `+inf` for identical images.
pub fn psnr(x: &ImagePlane, x_hat: &ImagePlane) -> Result<f64> {
    Ok(psnr_from_mse(mse(x, x_hat)?))
}

/// Maps a distortion to a higher-is-better decibel quality, `-10 log10(d)`.
pub fn distortion_to_quality(d: f64) -> f64 {
    -10.0 * d.log10()
}
