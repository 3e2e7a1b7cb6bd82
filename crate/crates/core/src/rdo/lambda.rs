use crate::error::{Error, Result};
use crate::grid::{BlockGrid, MB_PIXELS};
use crate::sketch::{spectral_norm_sq, SketchedJacobian, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

/// `tau_tilde = ||J_s||_2^2`.
pub fn compute_tau_tilde(j: &SketchedJacobian) -> Result<f64> {
    spectral_norm_sq(j, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

/// `2^((qp - 12) / 3)`.
pub fn qp_scale(qp: i32) -> f64 {
    ((qp - 12) as f64 / 3.0).exp2()
}

/// SSE Lagrangian `c * 2^((qp - 12) / 3)`.
pub fn sse_lambda(qp: i32, c: f64) -> f64 {
    c * qp_scale(qp)
}

/// Mean per-pixel squared Frobenius norm of the block slices.
pub fn normalized_frobenius(j: &SketchedJacobian, grid: &BlockGrid) -> Result<f64> {
    let per_block = j.frobenius_sq_per_block(grid)?;
    Ok(per_block.iter().sum::<f64>() / (MB_PIXELS * grid.n_blocks()) as f64)
}

/// IDSE Lagrangian `c * (sum_i ||J_s^(i)||_F^2 / (256 n_b) + tau) * 2^((qp - 12) / 3)`.
pub fn compute_lambda(qp: i32, c: f64, j: &SketchedJacobian, grid: &BlockGrid, tau: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("lambda constant must be > 0, got {c}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
    }
    Ok(c * (normalized_frobenius(j, grid)? + tau) * qp_scale(qp))
}
