//! SD-RED iteration `x+ = x - gamma * (grad g(x) + tau (x - D(x)))` with a
//! true or mismatched prior, reference zeros, and diagnostic traces.

mod reference;

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{default_peak, psnr};
use crate::objectives::{DataFidelity, Regularizer};
use crate::priors::Prior;
use crate::tensor::Tensor;

pub use reference::{conjugate_gradient, reference_zero, CgOutcome, ReferenceOptions};

#[derive(Debug, Clone)]
pub struct Problem {
    fidelity: DataFidelity,
    prior: Arc<dyn Prior>,
    mismatched: Option<Arc<dyn Prior>>,
    tau: f64,
    sigma: f64,
    regularizer: Option<Arc<dyn Regularizer>>,
    ground_truth: Option<(Tensor, f64)>,
}

impl Problem {
    pub fn new(fidelity: DataFidelity, prior: Arc<dyn Prior>, tau: f64, sigma: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            fidelity,
            prior,
            mismatched: None,
            tau,
            sigma,
            regularizer: None,
            ground_truth: None,
        })
    }

    pub fn with_mismatched(mut self, dhat: Arc<dyn Prior>) -> Self {
        self.mismatched = Some(dhat);
        self
    }

    /// Attaches `h` so traces record `f = g + h`.
    pub fn with_regularizer(mut self, reg: Arc<dyn Regularizer>) -> Self {
        self.regularizer = Some(reg);
        self
    }

    /// Attaches a ground truth so traces record PSNR (peak = its maximum).
    pub fn with_ground_truth(mut self, truth: Tensor) -> Result<Self> {
        truth.check_shape(self.fidelity.image_shape())?;
        let peak = default_peak(&truth)?;
        self.ground_truth = Some((truth, peak));
        Ok(self)
    }

    pub fn fidelity(&self) -> &DataFidelity {
        &self.fidelity
    }

    pub fn prior(&self) -> &Arc<dyn Prior> {
        &self.prior
    }

    pub fn mismatched(&self) -> Option<&Arc<dyn Prior>> {
        self.mismatched.as_ref()
    }

    pub fn regularizer(&self) -> Option<&Arc<dyn Regularizer>> {
        self.regularizer.as_ref()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ground_truth(&self) -> Option<&Tensor> {
        self.ground_truth.as_ref().map(|(t, _)| t)
    }

    fn active_prior(&self, use_mismatched: bool) -> Result<&Arc<dyn Prior>> {
        if use_mismatched {
            self.mismatched
                .as_ref()
                .ok_or_else(|| Error::invalid("mismatched prior requested but not configured"))
        } else {
            Ok(&self.prior)
        }
    }

    /// `f(x) = g(x) + h(x)` when a regularizer is attached.
    pub fn objective(&self, x: &Tensor) -> Result<Option<f64>> {
        match &self.regularizer {
            Some(reg) => Ok(Some(self.fidelity.eval(x)? + reg.eval(x)?)),
            None => Ok(None),
        }
    }
}

/// `grad g(x) + tau (x - D(x))`, with `D_hat` in place of `D` when requested.
pub fn residual_g(problem: &Problem, x: &Tensor, use_mismatched: bool) -> Result<Tensor> {
    let d = problem.active_prior(use_mismatched)?.apply(x, problem.sigma)?;
    let prior_term = x.sub(&d)?;
    problem.fidelity.grad(x)?.lincomb(1.0, &prior_term, problem.tau)
}

pub fn red_step(problem: &Problem, x: &Tensor, gamma: f64, use_mismatched: bool) -> Result<Tensor> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("step size must be nonnegative, got {gamma}")));
    }
    x.lincomb(1.0, &residual_g(problem, x, use_mismatched)?, -gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRegime {
    /// Inside the contraction range (and therefore the nonexpansive one).
    Contraction,
    Nonexpansive,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeReport {
    /// `(1 - lambda) tau / (L + (1 + lambda) tau)^2`; zero when `lambda = 1`.
    pub contraction_upper: f64,
    /// `1 / (L + 2 tau)`.
    pub nonexpansive_upper: f64,
    pub contraction: bool,
    pub nonexpansive: bool,
}

impl StepSizeReport {
    pub fn regime(&self) -> StepRegime {
        if self.contraction {
            StepRegime::Contraction
        } else if self.nonexpansive {
            StepRegime::Nonexpansive
        } else {
            StepRegime::Neither
        }
    }
}

pub fn check_step_size(lambda: f64, lipschitz: f64, tau: f64, gamma: f64) -> StepSizeReport {
    let contraction_upper = ((1.0 - lambda) * tau / (lipschitz + (1.0 + lambda) * tau).powi(2)).max(0.0);
    let nonexpansive_upper = 1.0 / (lipschitz + 2.0 * tau);
    StepSizeReport {
        contraction_upper,
        nonexpansive_upper,
        contraction: gamma > 0.0 && gamma < contraction_upper,
        nonexpansive: gamma > 0.0 && gamma < nonexpansive_upper,
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once `||x^k - x^{k-1}|| / max(||x^{k-1}||, 1)` drops below this;
    /// zero runs all iterations.
    pub tolerance: f64,
    pub reference: Option<Tensor>,
    /// Record diagnostics every `stride` iterations (the last iterate is
    /// always recorded).
    pub stride: usize,
    /// Starting point; defaults to the adjoint image `Re(A^H y)`.
    pub x0: Option<Tensor>,
    /// Iterate with the mismatched prior.
    pub use_mismatched: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, max_iters: usize) -> Self {
        Self {
            gamma,
            max_iters,
            tolerance: 0.0,
            reference: None,
            stride: 1,
            x0: None,
            use_mismatched: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid(format!("tolerance must be nonnegative, got {}", self.tolerance)));
        }
        if self.stride == 0 {
            return Err(Error::invalid("record stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// `||G(x^k)||^2` with the true prior.
    pub g_norm_sq: f64,
    /// `||G_hat(x^k)||^2` with the prior actually iterated.
    pub g_hat_norm_sq: f64,
    pub objective: Option<f64>,
    pub dist_to_ref: Option<f64>,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
    /// `||x^0 - x*||`.
    pub r0: Option<f64>,
    /// `max_k ||x^k - x*||` over every iterate, recorded or not.
    pub r_max: Option<f64>,
    pub final_iterate: Tensor,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn record(problem: &Problem, x: &Tensor, iter: usize, g_hat: &Tensor, use_mismatched: bool, reference: Option<&Tensor>) -> Result<TraceRecord> {
    let g_hat_norm_sq = g_hat.norm_sq();
    let g_norm_sq = if use_mismatched {
        residual_g(problem, x, false)?.norm_sq()
    } else {
        g_hat_norm_sq
    };
    let psnr = match &problem.ground_truth {
        Some((truth, peak)) => Some(psnr(truth, x, *peak)?),
        None => None,
    };
    Ok(TraceRecord {
        iter,
        g_norm_sq,
        g_hat_norm_sq,
        objective: problem.objective(x)?,
        dist_to_ref: reference.map(|r| x.distance(r)).transpose()?,
        psnr,
    })
}

pub fn run_sd_red(problem: &Problem, config: &SolverConfig) -> Result<IterateTrace> {
    config.validate()?;
    let shape = problem.fidelity.image_shape().to_vec();
    if let Some(r) = &config.reference {
        r.check_shape(&shape)?;
    }
    let mut warnings = Vec::new();
    let lambda = problem.active_prior(config.use_mismatched)?.lipschitz(problem.sigma);
    let steps = check_step_size(lambda, problem.fidelity.lipschitz(), problem.tau, config.gamma);
    if steps.regime() == StepRegime::Neither {
        let msg = format!(
            "gamma = {} is outside both convergence ranges (contraction < {:.6e}, nonexpansive < {:.6e})",
            config.gamma, steps.contraction_upper, steps.nonexpansive_upper
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let mut x = match &config.x0 {
        Some(x0) => {
            x0.check_shape(&shape)?;
            x0.clone()
        }
        None => problem.fidelity.adjoint_image()?,
    };
    let reference = config.reference.as_ref();
    let r0 = reference.map(|r| x.distance(r)).transpose()?;
    let mut r_max = r0;
    let mut records = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for k in 0..config.max_iters {
        let g_hat = residual_g(problem, &x, config.use_mismatched)?;
        if k % config.stride == 0 {
            records.push(record(problem, &x, k, &g_hat, config.use_mismatched, reference)?);
        }
        let next = x.lincomb(1.0, &g_hat, -config.gamma)?;
        if !next.is_finite() {
            return Err(Error::Divergence { iteration: k + 1 });
        }
        let change = config.gamma * g_hat.norm() / x.norm().max(1.0);
        x = next;
        iterations = k + 1;
        if let (Some(r), Some(m)) = (reference, r_max.as_mut()) {
            *m = m.max(x.distance(r)?);
        }
        if config.tolerance > 0.0 && change < config.tolerance {
            converged = true;
            break;
        }
    }
    let g_hat = residual_g(problem, &x, config.use_mismatched)?;
    records.push(record(problem, &x, iterations, &g_hat, config.use_mismatched, reference)?);

    Ok(IterateTrace {
        records,
        r0,
        r_max,
        final_iterate: x,
        iterations,
        converged,
        warnings,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::operators::IdentityOp;
    use crate::priors::{perturb_prior, PerturbationMode, ScalingPrior};

    /// `g = 0.5 (x - 1)^2`, `D(x) = 0.5 x`, `tau = 1`: `G(x) = 1.5 x - 1`.
    pub(crate) fn scalar_problem(sigma: f64) -> Problem {
        let fid = DataFidelity::new(Arc::new(IdentityOp::new(&[1])), Tensor::vector(vec![1.0])).unwrap();
        Problem::new(fid, Arc::new(ScalingPrior::new(0.5).unwrap()), 1.0, sigma).unwrap()
    }

    fn scalar(t: &Tensor) -> f64 {
        t.as_real().unwrap()[0]
    }

    #[test]
    fn residual_examples() {
        let p = scalar_problem(1.0);
        let at = |v: f64| scalar(&residual_g(&p, &Tensor::vector(vec![v]), false).unwrap());
        assert!(at(2.0 / 3.0).abs() < 1e-15);
        assert_eq!(at(0.0), -1.0);
        assert!(residual_g(&p, &Tensor::vector(vec![0.0]), true).is_err());

        let y = Tensor::vector(vec![0.5, -2.0]);
        let fid = DataFidelity::new(Arc::new(IdentityOp::new(&[2])), y.clone()).unwrap();
        let p = Problem::new(fid.clone(), Arc::new(ScalingPrior::identity()), 7.0, 1.0).unwrap();
        let x = Tensor::vector(vec![3.0, 1.0]);
        assert_eq!(residual_g(&p, &x, false).unwrap(), fid.grad(&x).unwrap());
    }

    #[test]
    fn step_examples() {
        let p = scalar_problem(1.0);
        let zero = Tensor::vector(vec![0.0]);
        assert!((scalar(&red_step(&p, &zero, 0.1, false).unwrap()) - 0.1).abs() < 1e-15);
        assert_eq!(red_step(&p, &zero, 0.0, false).unwrap(), zero);
        let fixed = Tensor::vector(vec![2.0 / 3.0]);
        assert!((scalar(&red_step(&p, &fixed, 0.3, false).unwrap()) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_run_converges_to_zero_of_g() {
        let p = scalar_problem(1.0);
        let trace = run_sd_red(&p, &SolverConfig::new(0.1, 200)).unwrap();
        assert!((scalar(&trace.final_iterate) - 2.0 / 3.0).abs() < 1e-8);
        assert_eq!(trace.records.len(), 201);
        assert!(trace.records.windows(2).all(|w| w[0].iter < w[1].iter));
    }

    #[test]
    fn start_at_reference_stays_there() {
        let p = scalar_problem(1.0);
        let star = Tensor::vector(vec![2.0 / 3.0]);
        let mut cfg = SolverConfig::new(0.2, 50);
        cfg.x0 = Some(star.clone());
        cfg.reference = Some(star);
        let trace = run_sd_red(&p, &cfg).unwrap();
        assert!(trace.records.iter().all(|r| r.dist_to_ref.unwrap() < 1e-15));
        assert!(trace.r_max.unwrap() < 1e-15);
    }

    #[test]
    fn mismatched_scalar_fixed_point() {
        let (sigma, eps) = (0.5, 0.2);
        let base = scalar_problem(sigma);
        let dhat = perturb_prior(base.prior().clone(), eps, PerturbationMode::FixedDirection).unwrap();
        let p = base.with_mismatched(Arc::new(dhat));
        let mut cfg = SolverConfig::new(0.1, 400);
        cfg.use_mismatched = true;
        cfg.reference = Some(Tensor::vector(vec![2.0 / 3.0]));
        let trace = run_sd_red(&p, &cfg).unwrap();
        let expected = (1.0 + sigma * eps) / 1.5;
        assert!((scalar(&trace.final_iterate) - expected).abs() < 1e-10);
        let gap = trace.records.last().unwrap().dist_to_ref.unwrap();
        assert!((gap - sigma * eps / 1.5).abs() < 1e-10);
        let last = trace.records.last().unwrap();
        assert!(last.g_hat_norm_sq < 1e-20 && last.g_norm_sq > 0.0);
    }

    #[test]
    fn divergence_names_iteration() {
        let p = scalar_problem(1.0);
        let err = run_sd_red(&p, &SolverConfig::new(1e200, 10)).unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 2 }), "{err}");
        let trace = run_sd_red(&p, &SolverConfig::new(1.0, 3)).unwrap();
        assert_eq!(trace.warnings.len(), 1);
    }

    #[test]
    fn tolerance_stops_early() {
        let p = scalar_problem(1.0);
        let mut cfg = SolverConfig::new(0.5, 10_000);
        cfg.tolerance = 1e-10;
        cfg.stride = 7;
        let trace = run_sd_red(&p, &cfg).unwrap();
        assert!(trace.converged && trace.iterations < 100);
        assert_eq!(trace.records.last().unwrap().iter, trace.iterations);
    }

    #[test]
    fn step_size_regimes() {
        let r = check_step_size(0.5, 1.0, 1.0, 0.04);
        assert!((r.contraction_upper - 0.08).abs() < 1e-15);
        assert_eq!(r.regime(), StepRegime::Contraction);
        let r = check_step_size(1.0, 1.0, 1.0, 0.2);
        assert_eq!(r.contraction_upper, 0.0);
        assert!((r.nonexpansive_upper - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.regime(), StepRegime::Nonexpansive);
        assert_eq!(check_step_size(0.5, 1.0, 1.0, 0.0).regime(), StepRegime::Neither);
    }
}
