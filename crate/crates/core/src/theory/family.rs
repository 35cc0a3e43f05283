use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bounds::check_tau_sigma;
use super::verify::{verify_trace, BoundReport, BoundRule, ContractionRule, ResidualAverageRule, ObjectiveGapRule};
use crate::error::{Error, Result};
use crate::objectives::{DataFidelity, L1Norm, Regularizer};
use crate::operators::MatrixOp;
use crate::priors::{perturb_prior, proximal_prior, GaussianMapDenoiser, PerturbationMode, Prior};
use crate::registry::Registry;
use crate::solver::{check_step_size, reference_zero, run_sd_red, IterateTrace, Problem, ReferenceOptions, SolverConfig};
use crate::tensor::Tensor;

/// Which bounds an instance is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCheck {
    Contraction,
    ResidualAverage,
    ObjectiveGap { f_star: f64, s: f64 },
}

/// One randomized problem, ready to run.
#[derive(Debug, Clone)]
pub struct TheoryInstance {
    pub seed: u64,
    pub problem: Problem,
    pub config: SolverConfig,
    pub lambda: f64,
    pub epsilon: f64,
    pub checks: Vec<BoundCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub slack: f64,
    /// Multiplier on the contraction constant `A`; 1 except for negative
    /// controls.
    pub a_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { slack: super::DEFAULT_SLACK, a_scale: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub seed: u64,
    pub trace: IterateTrace,
    pub reports: Vec<BoundReport>,
}

impl InstanceOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

impl TheoryInstance {
    pub fn lipschitz(&self) -> f64 {
        self.problem.fidelity().lipschitz()
    }

    pub fn run(&self, opts: &VerifyOptions) -> Result<InstanceOutcome> {
        let trace = run_sd_red(&self.problem, &self.config)?;
        let (l, tau, sigma, gamma) = (self.lipschitz(), self.problem.tau(), self.problem.sigma(), self.config.gamma);
        let reports = self
            .checks
            .iter()
            .map(|check| {
                let rule: Box<dyn BoundRule> = match *check {
                    BoundCheck::Contraction => Box::new(
                        ContractionRule::new(self.lambda, l, tau, gamma, sigma, self.epsilon, &trace)?.scale_a(opts.a_scale),
                    ),
                    BoundCheck::ResidualAverage => Box::new(ResidualAverageRule::new(l, tau, gamma, sigma, self.epsilon, &trace)?),
                    BoundCheck::ObjectiveGap { f_star, s } => {
                        Box::new(ObjectiveGapRule::new(l, tau, gamma, sigma, self.epsilon, s, f_star, &trace)?)
                    }
                };
                verify_trace(&trace, rule.as_ref(), opts.slack)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InstanceOutcome { seed: self.seed, trace, reports })
    }
}

/// A seeded generator of verification instances.
pub trait InstanceFamily: Send + Sync {
    fn name(&self) -> &str;

    fn instance(&self, seed: u64) -> Result<TheoryInstance>;
}

/// Overrides for the randomized families. Unset fields are drawn from the
/// family's ranges; every random draw happens regardless, so fixing one
/// parameter leaves the others unchanged for a given seed.
#[derive(Debug, Clone, Default)]
pub struct FamilyParams {
    pub iterations: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilon_max: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub weight: Option<f64>,
    pub mode: Option<PerturbationMode>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<f64> {
    let scale = 1.0 / (m as f64).sqrt();
    (0..m * n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn normals(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// `||A||^2` from the singular values.
fn exact_lipschitz(m: usize, n: usize, a: &[f64]) -> f64 {
    let s = DMatrix::from_row_slice(m, n, a).singular_values().max();
    s * s
}

fn matvec(m: usize, n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..m).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

fn draw_mismatch(rng: &mut ChaCha8Rng, seed: u64, params: &FamilyParams) -> (f64, PerturbationMode) {
    let u: f64 = rng.random();
    let epsilon = params.epsilon.unwrap_or(u * params.epsilon_max.unwrap_or(0.5));
    let mode = params.mode.unwrap_or(if seed.is_multiple_of(2) {
        PerturbationMode::FixedDirection
    } else {
        PerturbationMode::InputHashed
    });
    (epsilon, mode)
}

/// Least squares with a diagonal Gaussian prior of Lipschitz constant
/// `lambda` in [0.2, 0.9]; reference zero by a dense LU solve; step at half
/// the contraction threshold.
#[derive(Debug, Clone)]
pub struct LinearGaussianFamily {
    pub params: FamilyParams,
}

impl LinearGaussianFamily {
    pub const DEFAULT_ITERATIONS: usize = 500;
}

impl InstanceFamily for LinearGaussianFamily {
    fn name(&self) -> &str {
        "linear-theory"
    }

    fn instance(&self, seed: u64) -> Result<TheoryInstance> {
        let p = &self.params;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(4..=64usize);
        let m = rng.random_range((n / 2).max(1)..=2 * n);
        let a = gaussian_matrix(&mut rng, m, n);
        let lambda = p.lambda.unwrap_or(rng.random_range(0.2..=0.9));
        let tau_draw = rng.random_range(0.5..=2.0);
        let sigma_draw = rng.random_range(0.5..=2.0);
        let tau = p.tau.unwrap_or(tau_draw);
        let sigma = p.sigma.unwrap_or(sigma_draw);
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        // v / (v + sigma^2) = lambda at the largest variance.
        let v_max = lambda * sigma * sigma / (1.0 - lambda);
        let peak = rng.random_range(0..n);
        let variances: Vec<f64> = (0..n)
            .map(|i| {
                let u = rng.random_range(0.2..=1.0);
                if i == peak { v_max } else { u * v_max }
            })
            .collect();
        let mean = normals(&mut rng, n, 0.5);
        let truth: Vec<f64> = normals(&mut rng, n, 1.0)
            .iter()
            .zip(&mean)
            .zip(&variances)
            .map(|((z, mu), v)| mu + v.sqrt() * z)
            .collect();
        let noise = normals(&mut rng, m, 0.05);
        let y: Vec<f64> = matvec(m, n, &a, &truth).iter().zip(&noise).map(|(u, e)| u + e).collect();
        let (epsilon, mode) = draw_mismatch(&mut rng, seed, p);

        let lipschitz = exact_lipschitz(m, n, &a);
        let prior = GaussianMapDenoiser::new(Tensor::vector(mean.clone()), Tensor::vector(variances.clone()))?;
        let declared = prior.lipschitz(sigma);

        let am = DMatrix::from_row_slice(m, n, &a);
        let mut lhs = am.transpose() * &am;
        let mut rhs = am.transpose() * DVector::from_vec(y.clone());
        for i in 0..n {
            let w = variances[i] / (variances[i] + sigma * sigma);
            lhs[(i, i)] += tau * (1.0 - w);
            rhs[i] += tau * (1.0 - w) * mean[i];
        }
        let reference = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::invalid("reference system is singular"))?;

        let op = Arc::new(MatrixOp::real(m, n, a)?);
        let fidelity = DataFidelity::with_lipschitz(op, Tensor::vector(y), lipschitz)?;
        let prior: Arc<dyn Prior> = Arc::new(prior);
        let dhat = perturb_prior(prior.clone(), epsilon, mode)?;
        let problem = Problem::new(fidelity, prior, tau, sigma)?.with_mismatched(Arc::new(dhat));

        let gamma = 0.5 * check_step_size(declared, lipschitz, tau, 1.0).contraction_upper;
        let mut config = SolverConfig::new(gamma, p.iterations.unwrap_or(Self::DEFAULT_ITERATIONS));
        config.reference = Some(Tensor::vector(reference.iter().copied().collect()));
        config.use_mismatched = true;

        Ok(TheoryInstance {
            seed,
            problem,
            config,
            lambda: declared,
            epsilon,
            checks: vec![BoundCheck::Contraction],
        })
    }
}

/// `argmin_x g(x) + h(x)` by proximal gradient with step `1/L`; returns the
/// final point and the smallest objective value seen.
pub fn composite_minimum(
    fidelity: &DataFidelity,
    reg: &dyn Regularizer,
    max_iters: usize,
    tol: f64,
) -> Result<(Tensor, f64)> {
    let l = fidelity.lipschitz();
    if !(l > 0.0) {
        return Err(Error::invalid("proximal gradient needs a positive Lipschitz constant"));
    }
    let f = |x: &Tensor| -> Result<f64> { Ok(fidelity.eval(x)? + reg.eval(x)?) };
    let mut x = fidelity.adjoint_image()?;
    let mut best = f(&x)?;
    for _ in 0..max_iters {
        let next = reg.prox(&x.lincomb(1.0, &fidelity.grad(&x)?, -1.0 / l)?, 1.0 / l)?;
        let change = next.distance(&x)? / x.norm().max(1.0);
        x = next;
        best = best.min(f(&x)?);
        if change <= tol {
            break;
        }
    }
    Ok((x, best))
}

/// Least squares with an l1 proximal prior (`lambda = 1`), `tau = 1/sigma^2`,
/// step at half of `1/(L + 2 tau)`; checked against the residual-average and
/// objective-gap bounds.
#[derive(Debug, Clone)]
pub struct ProxPriorFamily {
    pub params: FamilyParams,
}

impl ProxPriorFamily {
    pub const DEFAULT_ITERATIONS: usize = 2000;
    pub const REFERENCE_ITERATIONS: usize = 50_000;

    fn tau_sigma(&self, sigma_draw: f64) -> Result<(f64, f64)> {
        match (self.params.tau, self.params.sigma) {
            (Some(tau), Some(sigma)) => {
                check_tau_sigma(tau, sigma)?;
                Ok((tau, sigma))
            }
            (Some(tau), None) => Ok((tau, 1.0 / tau.sqrt())),
            (None, Some(sigma)) => Ok((1.0 / (sigma * sigma), sigma)),
            (None, None) => Ok((1.0 / (sigma_draw * sigma_draw), sigma_draw)),
        }
    }
}

impl InstanceFamily for ProxPriorFamily {
    fn name(&self) -> &str {
        "prox-prior-theory"
    }

    fn instance(&self, seed: u64) -> Result<TheoryInstance> {
        let p = &self.params;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(8..=32usize);
        let m = 2 * n;
        let a = gaussian_matrix(&mut rng, m, n);
        let sigma_draw = rng.random_range(0.5..=1.5);
        let weight_draw = rng.random_range(0.02..=0.2);
        let (tau, sigma) = self.tau_sigma(sigma_draw)?;
        let weight = p.weight.unwrap_or(weight_draw);
        let truth: Vec<f64> = normals(&mut rng, n, 1.0)
            .into_iter()
            .enumerate()
            .map(|(i, z)| if i % 4 == 0 { z } else { 0.0 })
            .collect();
        let noise = normals(&mut rng, m, 0.01);
        let y: Vec<f64> = matvec(m, n, &a, &truth).iter().zip(&noise).map(|(u, e)| u + e).collect();
        let (epsilon, mode) = draw_mismatch(&mut rng, seed, p);

        let lipschitz = exact_lipschitz(m, n, &a);
        let op = Arc::new(MatrixOp::real(m, n, a)?);
        let fidelity = DataFidelity::with_lipschitz(op, Tensor::vector(y), lipschitz)?;
        let reg: Arc<dyn Regularizer> = Arc::new(L1Norm::new(weight)?);
        let prior: Arc<dyn Prior> = Arc::new(proximal_prior(reg.clone()));
        let dhat = perturb_prior(prior.clone(), epsilon, mode)?;
        let problem = Problem::new(fidelity, prior, tau, sigma)?
            .with_mismatched(Arc::new(dhat))
            .with_regularizer(reg.clone());

        let reference = reference_zero(&problem, &ReferenceOptions::default())?;
        let (_, f_star) = composite_minimum(problem.fidelity(), reg.as_ref(), Self::REFERENCE_ITERATIONS, 1e-12)?;
        let s = reg.lipschitz_bound(&[n]);

        let gamma = 0.5 / (lipschitz + 2.0 * tau);
        let mut config = SolverConfig::new(gamma, p.iterations.unwrap_or(Self::DEFAULT_ITERATIONS));
        config.reference = Some(reference);
        config.use_mismatched = true;

        Ok(TheoryInstance {
            seed,
            problem,
            config,
            lambda: 1.0,
            epsilon,
            checks: vec![BoundCheck::ResidualAverage, BoundCheck::ObjectiveGap { f_star, s }],
        })
    }
}

pub fn family_registry() -> Registry<FamilyParams, dyn InstanceFamily> {
    let mut reg: Registry<FamilyParams, dyn InstanceFamily> = Registry::new("theory family");
    reg.register("linear-theory", |p: &FamilyParams| {
        Ok(Arc::new(LinearGaussianFamily { params: p.clone() }) as Arc<dyn InstanceFamily>)
    });
    reg.register("prox-prior-theory", |p: &FamilyParams| {
        let family = ProxPriorFamily { params: p.clone() };
        family.tau_sigma(1.0)?;
        Ok(Arc::new(family) as Arc<dyn InstanceFamily>)
    });
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_instances_pass_and_are_deterministic() {
        let family = LinearGaussianFamily { params: FamilyParams::default() };
        for seed in 0..5 {
            let inst = family.instance(seed).unwrap();
            assert!(inst.lambda >= 0.2 - 1e-12 && inst.lambda <= 0.9 + 1e-12);
            let out = inst.run(&VerifyOptions::default()).unwrap();
            assert!(out.pass(), "seed {seed}: {}", out.reports[0].summary());
        }
        let a = family.instance(3).unwrap().run(&VerifyOptions::default()).unwrap();
        let b = family.instance(3).unwrap().run(&VerifyOptions::default()).unwrap();
        assert_eq!(a.trace.records, b.trace.records);
    }

    #[test]
    fn fixing_a_parameter_keeps_the_rest() {
        let free = LinearGaussianFamily { params: FamilyParams::default() }.instance(9).unwrap();
        let fixed = LinearGaussianFamily {
            params: FamilyParams { epsilon: Some(0.25), ..Default::default() },
        }
        .instance(9)
        .unwrap();
        assert_eq!(free.problem.tau(), fixed.problem.tau());
        assert_eq!(free.problem.fidelity().measurements(), fixed.problem.fidelity().measurements());
        assert_eq!(fixed.epsilon, 0.25);
    }

    #[test]
    fn composite_minimum_of_separable_lasso() {
        // A = I: the minimizer is the soft-threshold of y.
        let fid = DataFidelity::new(
            Arc::new(crate::operators::IdentityOp::new(&[3])),
            Tensor::vector(vec![2.0, -0.3, 0.0]),
        )
        .unwrap();
        let reg = L1Norm::new(0.5).unwrap();
        let (x, f) = composite_minimum(&fid, &reg, 100, 1e-14).unwrap();
        assert_eq!(x.as_real().unwrap(), &[1.5, 0.0, 0.0]);
        assert!((f - (0.125 + 0.045 + 0.75)).abs() < 1e-15);
    }

    #[test]
    fn prox_family_rejects_inconsistent_tau() {
        let params = FamilyParams { tau: Some(2.0), sigma: Some(1.0), ..Default::default() };
        assert!(family_registry().build("prox-prior-theory", &params).is_err());
        let ok = FamilyParams { sigma: Some(0.5), ..Default::default() };
        assert!(family_registry().build("prox-prior-theory", &ok).is_ok());
    }

    #[test]
    fn prox_instance_passes() {
        let family = ProxPriorFamily { params: FamilyParams::default() };
        let out = family.instance(1).unwrap().run(&VerifyOptions::default()).unwrap();
        for r in &out.reports {
            assert!(r.pass, "{}", r.summary());
        }
    }
}
