use super::SketchedJacobian;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::prng::Prng;

pub const SPECTRAL_TOL: f64 = 1e-6;
pub const SPECTRAL_MAX_ITER: usize = 1000;
const START_SEED: u64 = 0x5eed_0f_5bec;

/// `sigma_max(J)^2` by power iteration on the `n_s x n_s` Gram `J J^T`.
///
/// The Gram is applied matrix-free as `J (J^T u)`. Stops once the eigen
/// residual `||G u - mu u||` drops below `tol * mu`, or once the Aitken
/// extrapolation of the Rayleigh quotient sequence puts the remaining
/// error below `tol * mu`. The second test matters when the top singular
/// values are clustered: the quotient then settles long before the vector.
pub fn spectral_norm_sq(j: &SketchedJacobian, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let m = j.matrix();
    if m.data().iter().all(|&v| v == 0.0) {
        return Err(Error::domain("spectral norm of an all-zero Jacobian"));
    }
    let n_s = m.rows();
    let mut rng = Prng::new(START_SEED);
    let mut u: Vec<f64> = (0..n_s).map(|_| rng.normal()).collect();
    normalize(&mut u);
    let mut mu = 0.0;
    let mut prev_step = f64::NAN;
    for it in 0..max_iter {
        let g = m.matvec(&m.matvec_t(&u));
        let last = mu;
        mu = dot(&u, &g);
        if it > 0 {
            // the quotient is nondecreasing for a PSD Gram
            let step = mu - last;
            if step <= 0.0 {
                return Ok(mu.max(last));
            }
            let q = step / prev_step;
            if q > 0.0 && q < 1.0 && step * q / (1.0 - q) <= tol * mu {
                return Ok(mu);
            }
            prev_step = step;
        }
        let residual: f64 = g
            .iter()
            .zip(&u)
            .map(|(gi, ui)| (gi - mu * ui).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * mu {
            return Ok(mu);
        }
        u = g;
        if normalize(&mut u) == 0.0 {
            // start vector fell in the null space; the Gram is nonzero so retry
            u = (0..n_s).map(|_| rng.normal()).collect();
            normalize(&mut u);
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_estimate: mu,
    })
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jac(n_s: usize, entries: Vec<f64>) -> SketchedJacobian {
        SketchedJacobian::new(16, 16, n_s, entries, 0, "").unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let mut e = vec![0.0; 2 * 256];
        e[0] = 3.0;
        e[256 + 1] = 1.0;
        let v = spectral_norm_sq(&jac(2, e), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((v - 9.0).abs() < 9e-6);
    }

    #[test]
    fn scaled_identity() {
        let j = SketchedJacobian::identity(16, 16).unwrap().scaled(2.5);
        let v = spectral_norm_sq(&j, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((v - 6.25).abs() < 6.25e-6);
    }

    #[test]
    fn clustered_top_singular_values() {
        let mut rng = Prng::new(4);
        let mut e: Vec<f64> = (0..4 * 256).map(|_| rng.normal() * 1e-3).collect();
        e[0] = 3.0;
        e[256 + 1] = 3.0 * (1.0 - 1e-5);
        let v = spectral_norm_sq(&jac(4, e.clone()), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        // the exact value lies in [9 (1 - 2e-5), 9 + small perturbation]
        let s: f64 = (0..256).map(|k| e[k] * e[k]).sum();
        assert!(v <= s * (1.0 + 1e-5) && v >= 9.0 * (1.0 - 3e-5), "{v} {s}");
    }

    #[test]
    fn zero_matrix_rejected() {
        assert!(matches!(
            spectral_norm_sq(&jac(1, vec![0.0; 256]), SPECTRAL_TOL, 10),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn convergence_error_reports_estimate() {
        let mut rng = Prng::new(1);
        let e = (0..8 * 256).map(|_| rng.normal()).collect();
        match spectral_norm_sq(&jac(8, e), 1e-15, 1) {
            Err(Error::Convergence { iterations, last_estimate }) => {
                assert_eq!(iterations, 1);
                assert!(last_estimate > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
