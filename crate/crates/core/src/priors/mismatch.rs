use std::hash::Hasher;
use std::sync::Arc;

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AffineMap, Prior};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Offset along the constant direction `1 / sqrt(n)`.
    FixedDirection,
    /// Offset along a unit Gaussian direction seeded by a hash of the input.
    InputHashed,
}

impl std::str::FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "fixed-direction" => Ok(Self::FixedDirection),
            "hashed" | "input-hashed" => Ok(Self::InputHashed),
            other => Err(Error::UnknownName {
                kind: "perturbation mode",
                name: other.to_owned(),
            }),
        }
    }
}

impl std::fmt::Display for PerturbationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FixedDirection => "fixed",
            Self::InputHashed => "hashed",
        })
    }
}

/// `D_hat(x) = D(x) + sigma * epsilon * u(x)` with `||u(x)|| = 1`, so the
/// mismatch `||D_hat(x) - D(x)||` is exactly `sigma * epsilon`.
#[derive(Debug, Clone)]
pub struct MismatchedPrior {
    base: Arc<dyn Prior>,
    epsilon: f64,
    mode: PerturbationMode,
}

pub fn perturb_prior(
    base: Arc<dyn Prior>,
    epsilon: f64,
    mode: PerturbationMode,
) -> Result<MismatchedPrior> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    Ok(MismatchedPrior {
        base,
        epsilon,
        mode,
    })
}

impl MismatchedPrior {
    pub fn base(&self) -> &Arc<dyn Prior> {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> PerturbationMode {
        self.mode
    }

    fn direction(&self, x: &Tensor, n: usize) -> Vec<f64> {
        match self.mode {
            PerturbationMode::FixedDirection => vec![1.0 / (n as f64).sqrt(); n],
            PerturbationMode::InputHashed => {
                let mut hasher = FnvHasher::default();
                hasher.write(&x.payload_bytes());
                let mut rng = ChaCha8Rng::seed_from_u64(hasher.finish());
                loop {
                    let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        return u.into_iter().map(|v| v / norm).collect();
                    }
                }
            }
        }
    }
}

impl Prior for MismatchedPrior {
    fn apply(&self, x: &Tensor, sigma: f64) -> Result<Tensor> {
        let mut d = self.base.apply(x, sigma)?;
        let offset = sigma * self.epsilon;
        if offset == 0.0 {
            return Ok(d);
        }
        let n = d.len();
        let u = self.direction(x, n);
        for (di, ui) in d.as_real_mut()?.iter_mut().zip(u) {
            *di += offset * ui;
        }
        Ok(d)
    }

    fn lipschitz(&self, sigma: f64) -> f64 {
        self.base.lipschitz(sigma)
    }

    fn describe(&self) -> String {
        let mode = match self.mode {
            PerturbationMode::FixedDirection => "fixed",
            PerturbationMode::InputHashed => "hashed",
        };
        format!("{}+mismatch(eps={}, {mode})", self.base.describe(), self.epsilon)
    }

    fn affine(&self, sigma: f64, len: usize) -> Option<AffineMap> {
        let mut map = self.base.affine(sigma, len)?;
        if self.mode == PerturbationMode::FixedDirection {
            let shift = sigma * self.epsilon / (len as f64).sqrt();
            map.offset.iter_mut().for_each(|o| *o += shift);
            Some(map)
        } else if self.epsilon == 0.0 {
            Some(map)
        } else {
            None
        }
    }
}

/// Per-sigma statistics of `||D_hat(x) - D(x)||` over a set of test points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchRow {
    pub sigma: f64,
    pub mean_dist: f64,
    pub max_dist: f64,
    /// `max_dist / sigma`, an empirical lower estimate of epsilon.
    pub epsilon_hat: f64,
}

pub fn estimate_mismatch_epsilon(
    d: &dyn Prior,
    dhat: &dyn Prior,
    test_points: &[Tensor],
    sigmas: &[f64],
) -> Result<Vec<MismatchRow>> {
    if test_points.is_empty() || sigmas.is_empty() {
        return Err(Error::invalid("need at least one test point and one sigma"));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            if !(sigma > 0.0) {
                return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
            }
            let mut sum = 0.0;
            let mut max = 0.0f64;
            for x in test_points {
                let dist = dhat.apply(x, sigma)?.distance(&d.apply(x, sigma)?)?;
                sum += dist;
                max = max.max(dist);
            }
            Ok(MismatchRow {
                sigma,
                mean_dist: sum / test_points.len() as f64,
                max_dist: max,
                epsilon_hat: max / sigma,
            })
        })
        .collect()
}
