use super::matrix::norm2;
use super::DenseMatrix;
use crate::rng;

pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Result of [`spectral_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was reached first; `value` is then the
    /// best (largest) estimate seen.
    pub converged: bool,
}

/// Largest singular value by power iteration on `AᵀA`, with the default
/// cap of [`DEFAULT_MAX_ITERS`] iterations.
pub fn spectral_norm(a: &DenseMatrix, rel_tol: f64) -> SpectralNormEstimate {
    spectral_norm_capped(a, rel_tol, DEFAULT_MAX_ITERS)
}

/// Power iteration with an explicit cap.
///
/// Stops once the eigen-residual `‖AᵀAv − λv‖` falls below `rel_tol·λ`,
/// where `λ = ‖Av‖²` is the Rayleigh quotient of the unit iterate `v`.
/// The start vector is a fixed-seed Gaussian, so the estimate is a
/// deterministic function of `a`.
pub fn spectral_norm_capped(a: &DenseMatrix, rel_tol: f64, max_iters: usize) -> SpectralNormEstimate {
    let (n, m) = a.shape();
    if n == 0 || m == 0 || a.max_abs() == 0.0 {
        return SpectralNormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }

    let mut v = rng::gaussian_matrix(&mut rng::seeded(0x5eed_0f_a11), m, 1).into_vec();
    normalize(&mut v);
    let mut av = vec![0.0; n];
    let mut atav = vec![0.0; m];
    let mut best = 0.0_f64;

    for iter in 1..=max_iters {
        apply(a, &v, &mut av);
        apply_transposed(a, &av, &mut atav);
        let lambda = av.iter().map(|x| x * x).sum::<f64>();
        best = best.max(lambda.sqrt());
        if lambda == 0.0 {
            // Start vector in the null space; restart from a basis vector.
            v.iter_mut().for_each(|x| *x = 0.0);
            v[iter % m] = 1.0;
            continue;
        }
        let residual = atav
            .iter()
            .zip(&v)
            .map(|(z, x)| (z - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= rel_tol * lambda {
            return SpectralNormEstimate {
                value: best,
                iterations: iter,
                converged: true,
            };
        }
        v.copy_from_slice(&atav);
        normalize(&mut v);
    }
    SpectralNormEstimate {
        value: best,
        iterations: max_iters,
        converged: false,
    }
}

fn normalize(v: &mut [f64]) {
    let nrm = norm2(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
}

fn apply(a: &DenseMatrix, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = super::matrix::dot(a.row(i), x);
    }
}

fn apply_transposed(a: &DenseMatrix, y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &yi) in y.iter().enumerate() {
        for (o, &aij) in out.iter_mut().zip(a.row(i)) {
            *o += aij * yi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let a = DenseMatrix::from_diagonal(2, 2, &[5.0, 1.0]);
        let est = spectral_norm(&a, 1e-8);
        assert!(est.converged);
        assert!((est.value - 5.0).abs() <= 5.0 * 1e-8);
    }

    #[test]
    fn unit_rank_one() {
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0];
        let a = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let est = spectral_norm(&a, 1e-10);
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix_is_zero() {
        let est = spectral_norm(&DenseMatrix::zeros(5, 4), 1e-8);
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn cap_reports_nonconvergence() {
        // Nearly tied top singular values converge slowly.
        let a = DenseMatrix::from_diagonal(3, 3, &[1.0, 0.999_999, 0.5]);
        let est = spectral_norm_capped(&a, 1e-14, 3);
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
        assert!(est.value <= 1.0 + 1e-15);
        assert!(est.value > 0.5);
    }
}
