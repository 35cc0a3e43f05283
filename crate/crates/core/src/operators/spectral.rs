use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const POWER_SEED: u64 = 0x5_eed0_fa11;

#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub estimate: f64,
    /// `sqrt` of the Rayleigh quotient of `A^H A` after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Power iteration on `A^H A` from a fixed-seed Gaussian start.
pub fn power_iteration(op: &dyn LinearOperator, max_iters: usize, tol: f64) -> Result<PowerIteration> {
    if max_iters == 0 {
        return Err(Error::invalid("power iteration needs max_iters >= 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("power iteration needs tol > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let n: usize = op.input_shape().iter().product();
    let start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut v = Tensor::real(op.input_shape(), start)?;
    v = v.scale(1.0 / v.norm());

    let mut history = Vec::with_capacity(max_iters.min(1024));
    let mut converged = false;
    for _ in 0..max_iters {
        let av = op.forward(&v)?;
        let estimate = av.norm();
        if estimate == 0.0 {
            history.push(0.0);
            converged = true;
            break;
        }
        let prev = history.last().copied();
        history.push(estimate);
        if prev.is_some_and(|p| (estimate - p).abs() < tol) {
            converged = true;
            break;
        }
        let u = op.adjoint(&av)?;
        let un = u.norm();
        if un == 0.0 {
            break;
        }
        v = u.scale(1.0 / un);
    }
    Ok(PowerIteration {
        estimate: history.last().copied().unwrap_or(0.0),
        history,
        converged,
    })
}

/// Largest singular value of `op`; a lower bound up to `tol`.
pub fn estimate_spectral_norm(op: &dyn LinearOperator, max_iters: usize, tol: f64) -> Result<f64> {
    Ok(power_iteration(op, max_iters, tol)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{IdentityOp, MatrixOp};

    #[test]
    fn diagonal_matrix() {
        let op = MatrixOp::real(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let s = estimate_spectral_norm(&op, 1000, 1e-14).unwrap();
        assert!((s - 3.0).abs() < 1e-8);
    }

    #[test]
    fn dense_two_by_two() {
        // Largest singular value from the closed-form 2x2 SVD.
        let op = MatrixOp::real(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = estimate_spectral_norm(&op, 1000, 1e-14).unwrap();
        assert!((s - 5.464_985_704_2).abs() < 1e-4);
    }

    #[test]
    fn zero_operator_returns_zero() {
        let op = MatrixOp::real(2, 3, vec![0.0; 6]).unwrap();
        assert_eq!(estimate_spectral_norm(&op, 10, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn estimates_never_decrease() {
        let entries: Vec<f64> = (0..48).map(|i| ((i * 37 % 17) as f64 - 8.0) / 5.0).collect();
        let op = MatrixOp::real(8, 6, entries).unwrap();
        let run = power_iteration(&op, 200, 1e-15).unwrap();
        for pair in run.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12, "{pair:?}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let op = IdentityOp::new(&[2]);
        assert!(estimate_spectral_norm(&op, 0, 1e-8).is_err());
        assert!(estimate_spectral_norm(&op, 5, 0.0).is_err());
    }
}
