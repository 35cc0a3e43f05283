use super::{AffineMap, Prior};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Exact MAP (and MMSE) denoiser for a diagonal Gaussian prior
/// `N(mean, diag(variances))`: `D(z) = mean + v / (v + sigma^2) * (z - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMapDenoiser {
    mean: Tensor,
    variances: Tensor,
}

impl GaussianMapDenoiser {
    pub fn new(mean: Tensor, variances: Tensor) -> Result<Self> {
        variances.check_shape(mean.shape())?;
        let v = variances.as_real()?;
        mean.as_real()?;
        if let Some(bad) = v.iter().find(|&&vi| !(vi > 0.0) || !vi.is_finite()) {
            return Err(Error::invalid(format!("variances must be positive, got {bad}")));
        }
        Ok(Self { mean, variances })
    }

    pub fn mean(&self) -> &Tensor {
        &self.mean
    }

    pub fn variances(&self) -> &Tensor {
        &self.variances
    }

    fn weights(&self, sigma: f64) -> impl Iterator<Item = f64> + '_ {
        let s2 = sigma * sigma;
        self.variances
            .as_real()
            .expect("validated real")
            .iter()
            .map(move |&v| v / (v + s2))
    }
}

pub fn gaussian_map_denoiser(
    mean: &Tensor,
    variances: &Tensor,
    sigma: f64,
    z: &Tensor,
) -> Result<Tensor> {
    GaussianMapDenoiser::new(mean.clone(), variances.clone())?.apply(z, sigma)
}

impl Prior for GaussianMapDenoiser {
    fn apply(&self, z: &Tensor, sigma: f64) -> Result<Tensor> {
        z.check_shape(self.mean.shape())?;
        let zv = z.as_real()?;
        let m = self.mean.as_real()?;
        let out = zv
            .iter()
            .zip(m)
            .zip(self.weights(sigma))
            .map(|((&zi, &mi), wi)| mi + wi * (zi - mi))
            .collect();
        Tensor::real(z.shape(), out)
    }

    fn lipschitz(&self, sigma: f64) -> f64 {
        self.weights(sigma).fold(0.0, f64::max)
    }

    fn describe(&self) -> String {
        format!("gaussian-map(n={})", self.mean.len())
    }

    fn affine(&self, sigma: f64, len: usize) -> Option<AffineMap> {
        if len != self.mean.len() {
            return None;
        }
        let weights: Vec<f64> = self.weights(sigma).collect();
        let offset = self
            .mean
            .as_real()
            .ok()?
            .iter()
            .zip(&weights)
            .map(|(&m, &w)| (1.0 - w) * m)
            .collect();
        Some(AffineMap { weights, offset })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::estimate_prior_lipschitz;

    fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn scalar_example_matches_direct_minimization() {
        let one = |v| Tensor::vector(vec![v]);
        let out = gaussian_map_denoiser(&one(0.0), &one(1.0), 1.0, &one(2.0)).unwrap();
        let direct = golden_section(|x| 0.5 * (x - 2.0) * (x - 2.0) + 0.5 * x * x, -10.0, 10.0);
        assert!((out.as_real().unwrap()[0] - 1.0).abs() < 1e-15);
        // Golden section resolves a smooth minimum only to about sqrt(machine eps).
        assert!((direct - out.as_real().unwrap()[0]).abs() < 1e-6);
    }

    #[test]
    fn limits_and_fixed_point() {
        let mean = Tensor::vector(vec![0.3, -1.0]);
        let d = GaussianMapDenoiser::new(mean.clone(), Tensor::vector(vec![1.0, 4.0])).unwrap();
        let z = Tensor::vector(vec![5.0, 2.0]);
        assert!(d.apply(&z, 1e-9).unwrap().distance(&z).unwrap() < 1e-12);
        assert_eq!(d.apply(&mean, 3.0).unwrap(), mean);
        assert!((d.lipschitz(1.0) - 0.8).abs() < 1e-15);
        let bad = GaussianMapDenoiser::new(mean, Tensor::vector(vec![1.0, 0.0]));
        assert!(bad.is_err());
    }

    #[test]
    fn lipschitz_estimate_equals_slope() {
        let d = GaussianMapDenoiser::new(Tensor::zeros(&[10]).unwrap(), Tensor::real(&[10], vec![1.0; 10]).unwrap())
            .unwrap();
        let est = estimate_prior_lipschitz(&d, &[10], 1.0, 20, 1.0, 3).unwrap();
        assert!((est - 0.5).abs() < 1e-12);
    }
}
