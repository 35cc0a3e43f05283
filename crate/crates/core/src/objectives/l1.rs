use super::Regularizer;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    v.signum() * (v.abs() - threshold).max(0.0)
}

/// `weight * ||x||_1`.
pub fn l1_eval(weight: f64, x: &Tensor) -> Result<f64> {
    if !(weight >= 0.0) {
        return Err(Error::invalid(format!("l1 weight must be nonnegative, got {weight}")));
    }
    Ok(weight * x.as_real()?.iter().map(|v| v.abs()).sum::<f64>())
}

/// Elementwise soft-thresholding at `threshold` (= weight * mu).
pub fn prox_l1(threshold: f64, z: &Tensor) -> Result<Tensor> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!("threshold must be nonnegative, got {threshold}")));
    }
    let out = z.as_real()?.iter().map(|&v| soft_threshold(v, threshold)).collect();
    Tensor::real(z.shape(), out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::invalid(format!("l1 weight must be positive, got {weight}")));
        }
        Ok(Self { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl Regularizer for L1Norm {
    fn name(&self) -> &str {
        "l1"
    }

    fn eval(&self, x: &Tensor) -> Result<f64> {
        l1_eval(self.weight, x)
    }

    fn prox(&self, z: &Tensor, mu: f64) -> Result<Tensor> {
        if !(mu >= 0.0) {
            return Err(Error::invalid(format!("prox parameter must be nonnegative, got {mu}")));
        }
        prox_l1(self.weight * mu, z)
    }

    fn lipschitz_bound(&self, shape: &[usize]) -> f64 {
        self.weight * (shape.iter().product::<usize>() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force minimizer of 0.5 (x - z)^2 + t |x| on a fine grid.
    fn grid_prox(z: f64, t: f64) -> f64 {
        (-40_000..=40_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| {
                let fa = 0.5 * (a - z).powi(2) + t * a.abs();
                let fb = 0.5 * (b - z).powi(2) + t * b.abs();
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn zero_mu_is_identity() {
        let z = Tensor::vector(vec![3.0, -0.5, 0.0]);
        assert_eq!(L1Norm::new(2.0).unwrap().prox(&z, 0.0).unwrap(), z);
    }

    #[test]
    fn soft_threshold_example_against_grid_search() {
        let z = Tensor::vector(vec![3.0, -0.5]);
        let p = prox_l1(1.0, &z).unwrap();
        assert_eq!(p.as_real().unwrap(), &[2.0, 0.0]);
        for (&zi, &pi) in [3.0, -0.5].iter().zip(p.as_real().unwrap()) {
            assert!((grid_prox(zi, 1.0) - pi).abs() < 1e-4);
        }
    }

    #[test]
    fn eval_example() {
        assert_eq!(l1_eval(2.0, &Tensor::vector(vec![1.0, -2.0])).unwrap(), 6.0);
        assert!(l1_eval(-1.0, &Tensor::vector(vec![1.0])).is_err());
        assert!(L1Norm::new(-1.0).is_err());
    }

    #[test]
    fn lipschitz_bound_scales_with_sqrt_n() {
        assert_eq!(L1Norm::new(0.5).unwrap().lipschitz_bound(&[4, 4]), 2.0);
    }
}
