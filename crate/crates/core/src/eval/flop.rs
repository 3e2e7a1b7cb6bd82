use crate::error::{Error, Result};

/// FLOP ratio of block feature distance over sketched IDSE:
/// `h w (n_r + 1) / (h' w' (2 n_s + 1))`.
///
/// `h x w` is the coded image, `h' x w'` the extractor input, `n_r` the RDO
/// candidates per block, and `n_s` the sketch rows.
pub fn flop_model(h: f64, w: f64, h_in: f64, w_in: f64, n_r: f64, n_s: f64) -> Result<f64> {
    if [h, w, h_in, w_in, n_r, n_s].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain("FLOP model arguments must be positive"));
    }
    Ok(h * w * (n_r + 1.0) / (h_in * w_in * (2.0 * n_s + 1.0)))
}
