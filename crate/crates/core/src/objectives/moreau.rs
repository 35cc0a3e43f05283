use super::Regularizer;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("sigma^2 must be positive, got {sigma2}")));
    }
    Ok(())
}

/// `min_v 0.5 ||v - x||^2 + sigma2 * h(v)`, evaluated at `v = prox_{sigma2 h}(x)`.
pub fn moreau_envelope(reg: &dyn Regularizer, sigma2: f64, x: &Tensor) -> Result<f64> {
    check_sigma2(sigma2)?;
    let v = reg.prox(x, sigma2)?;
    Ok(0.5 * v.distance(x)?.powi(2) + sigma2 * reg.eval(&v)?)
}

/// Gradient of [`moreau_envelope`] in `x`: the prox residual `x - prox(x)`.
pub fn moreau_gradient(reg: &dyn Regularizer, sigma2: f64, x: &Tensor) -> Result<Tensor> {
    check_sigma2(sigma2)?;
    x.sub(&reg.prox(x, sigma2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{L1Norm, TotalVariation, TvSolverOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 1-D brute force of min_v 0.5 (v - x)^2 + s |v|.
    fn brute_envelope(x: f64, s: f64) -> f64 {
        (-60_000..=60_000)
            .map(|i| i as f64 * 1e-4)
            .map(|v| 0.5 * (v - x).powi(2) + s * v.abs())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn huber_value_at_two() {
        let h = L1Norm::new(1.0).unwrap();
        let x = Tensor::vector(vec![2.0]);
        let env = moreau_envelope(&h, 1.0, &x).unwrap();
        assert_eq!(env, 1.5);
        assert!((brute_envelope(2.0, 1.0) - 1.5).abs() < 1e-7);
        // Sandwich is tight here: h(x) - env/mu = (mu/2) S^2.
        assert_eq!(h.eval(&x).unwrap() - env / 1.0, 0.5);
        assert_eq!(moreau_gradient(&h, 1.0, &x).unwrap().as_real().unwrap(), &[1.0]);
    }

    #[test]
    fn minimizer_of_h() {
        let h = L1Norm::new(3.0).unwrap();
        let x = Tensor::vector(vec![0.0, 0.0]);
        assert_eq!(moreau_envelope(&h, 0.7, &x).unwrap(), 0.0);
        assert_eq!(moreau_gradient(&h, 0.7, &x).unwrap().norm(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_sigma2() {
        let h = L1Norm::new(1.0).unwrap();
        assert!(moreau_envelope(&h, 0.0, &Tensor::vector(vec![1.0])).is_err());
        assert!(moreau_gradient(&h, -1.0, &Tensor::vector(vec![1.0])).is_err());
    }

    #[test]
    fn tv_envelope_gradient_matches_finite_differences() {
        let tv = TotalVariation::new(
            0.2,
            TvSolverOptions {
                inner_iters: 20_000,
                inner_tol: 1e-14,
                accelerated: true,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = Tensor::real(&[6, 6], (0..36).map(|_| rng.random_range(0.0..1.0)).collect())
            .unwrap();
        let dir = Tensor::real(&[6, 6], (0..36).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let grad = moreau_gradient(&tv, 0.5, &x).unwrap();
        let h = 1e-5;
        let fd = (moreau_envelope(&tv, 0.5, &x.lincomb(1.0, &dir, h).unwrap()).unwrap()
            - moreau_envelope(&tv, 0.5, &x.lincomb(1.0, &dir, -h).unwrap()).unwrap())
            / (2.0 * h);
        let an = grad.inner(&dir).unwrap().re;
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
    }
}
