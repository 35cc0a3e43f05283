//! Strength-parameterized priors `D_sigma`, controlled mismatch wrappers,
//! and 1-D log-concave MAP oracles.

mod density1d;
mod gaussian;
mod mismatch;

use std::fmt::Debug;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::objectives::{L1Norm, Regularizer, TotalVariation, TvSolverOptions};
use crate::registry::Registry;
use crate::tensor::Tensor;

pub use density1d::{
    density_ratio_to_epsilon, map_denoiser_1d, verify_theorem3_1d, LogConcaveDensity1D,
    DensityRatioReport, DEFAULT_GRID_NODES,
};
pub use gaussian::{gaussian_map_denoiser, GaussianMapDenoiser};
pub use mismatch::{
    estimate_mismatch_epsilon, perturb_prior, MismatchRow, MismatchedPrior,
    PerturbationMode,
};

/// Elementwise affine map `x -> weights * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub weights: Vec<f64>,
    pub offset: Vec<f64>,
}

/// A denoiser-like map `D_sigma` with a declared Lipschitz constant.
pub trait Prior: Send + Sync + Debug {
    fn apply(&self, x: &Tensor, sigma: f64) -> Result<Tensor>;

    /// Declared Lipschitz constant at strength `sigma`, in `(0, 1]` for the
    /// priors the convergence theory covers.
    fn lipschitz(&self, sigma: f64) -> f64;

    fn describe(&self) -> String;

    /// Closed form when `D_sigma` is elementwise affine on tensors of `len`
    /// elements; lets reference solutions use a linear solve.
    fn affine(&self, _sigma: f64, _len: usize) -> Option<AffineMap> {
        None
    }
}

/// `D_sigma = prox_{sigma^2 h}`.
#[derive(Debug, Clone)]
pub struct ProximalPrior {
    reg: Arc<dyn Regularizer>,
}

pub fn proximal_prior(reg: Arc<dyn Regularizer>) -> ProximalPrior {
    ProximalPrior { reg }
}

impl ProximalPrior {
    pub fn regularizer(&self) -> &Arc<dyn Regularizer> {
        &self.reg
    }
}

impl Prior for ProximalPrior {
    fn apply(&self, x: &Tensor, sigma: f64) -> Result<Tensor> {
        self.reg.prox(x, sigma * sigma)
    }

    fn lipschitz(&self, _sigma: f64) -> f64 {
        1.0
    }

    fn describe(&self) -> String {
        format!("prox[{}]", self.reg.name())
    }
}

/// `D(x) = factor * x`, independent of `sigma`. `factor = 1` is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPrior {
    factor: f64,
}

impl ScalingPrior {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::invalid(format!(
                "scaling prior factor must lie in (0, 1], got {factor}"
            )));
        }
        Ok(Self { factor })
    }

    pub fn identity() -> Self {
        Self { factor: 1.0 }
    }
}

impl Prior for ScalingPrior {
    fn apply(&self, x: &Tensor, _sigma: f64) -> Result<Tensor> {
        Ok(x.scale(self.factor))
    }

    fn lipschitz(&self, _sigma: f64) -> f64 {
        self.factor
    }

    fn describe(&self) -> String {
        if self.factor == 1.0 {
            "identity".into()
        } else {
            format!("scaling({})", self.factor)
        }
    }

    fn affine(&self, _sigma: f64, len: usize) -> Option<AffineMap> {
        Some(AffineMap {
            weights: vec![self.factor; len],
            offset: vec![0.0; len],
        })
    }
}

/// Largest observed `||D(x) - D(z)|| / ||x - z||` over random Gaussian probe
/// pairs of standard deviation `scale`. A lower bound on the true constant.
pub fn estimate_prior_lipschitz(
    prior: &dyn Prior,
    shape: &[usize],
    sigma: f64,
    probe_count: usize,
    scale: f64,
    seed: u64,
) -> Result<f64> {
    if probe_count == 0 {
        return Err(Error::invalid("need at least one probe pair"));
    }
    let n: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Tensor> {
        Tensor::real(
            shape,
            (0..n)
                .map(|_| {
                    let s: f64 = StandardNormal.sample(rng);
                    scale * s
                })
                .collect(),
        )
    };
    let mut best = 0.0f64;
    for _ in 0..probe_count {
        let x = draw(&mut rng)?;
        let z = draw(&mut rng)?;
        let den = x.distance(&z)?;
        if den == 0.0 {
            continue;
        }
        let num = prior.apply(&x, sigma)?.distance(&prior.apply(&z, sigma)?)?;
        best = best.max(num / den);
    }
    Ok(best)
}

/// Parameters available to prior factories.
#[derive(Debug, Clone)]
pub struct PriorParams {
    pub shape: Vec<usize>,
    /// Regularizer weight for `l1` / `tv`.
    pub weight: f64,
    /// Slope of the `scaling` prior.
    pub factor: f64,
    /// Variance of the `gaussian` prior (same for every element).
    pub variance: f64,
    /// Mean of the `gaussian` prior (same for every element).
    pub mean: f64,
    pub tv: TvSolverOptions,
}

impl Default for PriorParams {
    fn default() -> Self {
        Self {
            shape: vec![1],
            weight: 1.0,
            factor: 0.5,
            variance: 1.0,
            mean: 0.0,
            tv: TvSolverOptions::default(),
        }
    }
}

pub fn regularizer_registry() -> Registry<PriorParams, dyn Regularizer> {
    let mut reg: Registry<PriorParams, dyn Regularizer> = Registry::new("regularizer");
    reg.register("l1", |p: &PriorParams| {
        Ok(Arc::new(L1Norm::new(p.weight)?) as Arc<dyn Regularizer>)
    });
    reg.register("tv", |p: &PriorParams| {
        Ok(Arc::new(TotalVariation::new(p.weight, p.tv)?) as Arc<dyn Regularizer>)
    });
    reg
}

/// Built-in priors: `identity`, `scaling`, `gaussian`, and proximal priors
/// `l1` and `tv`.
pub fn prior_registry() -> Registry<PriorParams, dyn Prior> {
    let mut reg: Registry<PriorParams, dyn Prior> = Registry::new("prior");
    reg.register("identity", |_: &PriorParams| {
        Ok(Arc::new(ScalingPrior::identity()) as Arc<dyn Prior>)
    });
    reg.register("scaling", |p: &PriorParams| {
        Ok(Arc::new(ScalingPrior::new(p.factor)?) as Arc<dyn Prior>)
    });
    reg.register("gaussian", |p: &PriorParams| {
        let n: usize = p.shape.iter().product();
        let g = GaussianMapDenoiser::new(
            Tensor::real(&p.shape, vec![p.mean; n])?,
            Tensor::real(&p.shape, vec![p.variance; n])?,
        )?;
        Ok(Arc::new(g) as Arc<dyn Prior>)
    });
    for name in ["l1", "tv"] {
        reg.register(name, move |p: &PriorParams| {
            let r = regularizer_registry().build(name, p)?;
            Ok(Arc::new(proximal_prior(r)) as Arc<dyn Prior>)
        });
    }
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proximal_prior_examples() {
        let d = proximal_prior(Arc::new(L1Norm::new(1.0).unwrap()));
        let x = Tensor::vector(vec![3.0, -0.5]);
        assert_eq!(d.apply(&x, 1.0).unwrap().as_real().unwrap(), &[2.0, 0.0]);
        let tiny = d.apply(&x, 1e-9).unwrap();
        assert!(tiny.distance(&x).unwrap() < 1e-6);
        assert_eq!(d.lipschitz(1.0), 1.0);
        let est = estimate_prior_lipschitz(&d, &[16], 0.7, 100, 1.0, 5).unwrap();
        assert!(est <= 1.0 + 1e-12);
    }

    #[test]
    fn lipschitz_estimates_of_linear_priors() {
        let id = ScalingPrior::identity();
        let est = estimate_prior_lipschitz(&id, &[8], 1.0, 10, 1.0, 1).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        let s = ScalingPrior::new(0.3).unwrap();
        let est = estimate_prior_lipschitz(&s, &[8], 1.0, 10, 1.0, 1).unwrap();
        assert!((est - 0.3).abs() < 1e-12);
        assert!(ScalingPrior::new(1.5).is_err());
    }

    #[test]
    fn registry_builds_every_builtin() {
        let reg = prior_registry();
        let params = PriorParams {
            shape: vec![4, 4],
            ..Default::default()
        };
        let x = Tensor::real(&[4, 4], (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
        for name in ["identity", "scaling", "gaussian", "l1", "tv"] {
            let p = reg.build(name, &params).unwrap();
            assert_eq!(p.apply(&x, 0.5).unwrap().shape(), &[4, 4], "{name}");
        }
        assert!(reg.build("dncnn", &params).is_err());
    }
}
