use super::{residual_g, Problem};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Relative residual target for the conjugate-gradient path.
    pub cg_tol: f64,
    /// Relative-change tolerance for the iterative path.
    pub tolerance: f64,
    pub max_iters: usize,
    /// The returned point satisfies `||G(x*)|| <= residual_scale (1 + ||G(x0)||)`.
    pub residual_scale: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            cg_tol: 1e-12,
            tolerance: 1e-12,
            max_iters: 100_000,
            residual_scale: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive (semi)definite `apply`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; rhs.len()];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for k in 0..max_iters {
        let rel = rr.sqrt() / bnorm;
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: k, relative_residual: rel, converged: true });
        }
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let relative_residual = rr.sqrt() / bnorm;
    Ok(CgOutcome { x, iterations: max_iters, relative_residual, converged: relative_residual <= tol })
}

fn linear_solve(problem: &Problem, opts: &ReferenceOptions) -> Result<Option<Tensor>> {
    let shape = problem.fidelity().image_shape().to_vec();
    let n: usize = shape.iter().product();
    let Some(map) = problem.prior().affine(problem.sigma(), n) else {
        return Ok(None);
    };
    let op = problem.fidelity().operator();
    let tau = problem.tau();
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        let t = Tensor::real(&shape, v.to_vec())?;
        let normal = op.adjoint(&op.forward(&t)?)?.real_part().into_real_vec()?;
        Ok(normal
            .iter()
            .zip(v)
            .zip(&map.weights)
            .map(|((a, vi), w)| a + tau * (1.0 - w) * vi)
            .collect())
    };
    let rhs: Vec<f64> = problem
        .fidelity()
        .adjoint_image()?
        .into_real_vec()?
        .iter()
        .zip(&map.offset)
        .map(|(a, b)| a + tau * b)
        .collect();
    let out = conjugate_gradient(apply, &rhs, opts.cg_tol, 10 * n + 1000)?;
    if !out.converged {
        return Ok(None);
    }
    Ok(Some(Tensor::real(&shape, out.x)?))
}

/// High-accuracy zero of `G` with the true prior: a conjugate-gradient solve
/// of `(Re A^H A + tau (I - W)) x = Re A^H y + tau b` when `D(x) = W x + b`
/// is elementwise affine, otherwise SD-RED at `gamma = 0.99 / (L + 2 tau)`.
pub fn reference_zero(problem: &Problem, opts: &ReferenceOptions) -> Result<Tensor> {
    let x0 = problem.fidelity().adjoint_image()?;
    let g0 = residual_g(problem, &x0, false)?.norm();
    let target = opts.residual_scale * (1.0 + g0);

    if let Some(x) = linear_solve(problem, opts)? {
        if residual_g(problem, &x, false)?.norm() <= target {
            return Ok(x);
        }
    }

    let gamma = 0.99 / (problem.fidelity().lipschitz() + 2.0 * problem.tau());
    let mut x = x0;
    let mut g = residual_g(problem, &x, false)?;
    for k in 0..opts.max_iters {
        let gn = g.norm();
        if gn <= 0.1 * target {
            break;
        }
        let next = x.lincomb(1.0, &g, -gamma)?;
        if !next.is_finite() {
            return Err(Error::Divergence { iteration: k + 1 });
        }
        let change = gamma * gn / x.norm().max(1.0);
        x = next;
        g = residual_g(problem, &x, false)?;
        if change < opts.tolerance {
            break;
        }
    }
    let residual = g.norm();
    if residual > target {
        return Err(Error::NonConvergence {
            iterations: opts.max_iters,
            residual,
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::objectives::{DataFidelity, L1Norm};
    use crate::operators::{IdentityOp, MatrixOp};
    use crate::priors::{proximal_prior, GaussianMapDenoiser, ScalingPrior};
    use crate::solver::tests::scalar_problem;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_reference() {
        let x = reference_zero(&scalar_problem(1.0), &ReferenceOptions::default()).unwrap();
        assert!((x.as_real().unwrap()[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_everything_returns_measurements() {
        let y = Tensor::vector(vec![0.3, -1.7, 2.2]);
        let fid = DataFidelity::new(Arc::new(IdentityOp::new(&[3])), y.clone()).unwrap();
        let p = Problem::new(fid, Arc::new(ScalingPrior::identity()), 4.0, 1.0).unwrap();
        let x = reference_zero(&p, &ReferenceOptions::default()).unwrap();
        assert!(x.distance(&y).unwrap() < 1e-12);
    }

    #[test]
    fn gaussian_quadratic_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (m, n) = (40, 48);
        let a: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0) / (m as f64).sqrt()).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let var: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
        let (tau, sigma) = (0.8, 0.6);

        let fid = DataFidelity::new(Arc::new(MatrixOp::real(m, n, a.clone()).unwrap()), Tensor::vector(y.clone()))
            .unwrap();
        let prior = GaussianMapDenoiser::new(Tensor::vector(mean.clone()), Tensor::vector(var.clone())).unwrap();
        let p = Problem::new(fid, Arc::new(prior), tau, sigma).unwrap();
        let x = reference_zero(&p, &ReferenceOptions::default()).unwrap();

        let am = DMatrix::from_row_slice(m, n, &a);
        let w: Vec<f64> = var.iter().map(|v| v / (v + sigma * sigma)).collect();
        let mut lhs = am.transpose() * &am;
        let mut rhs = am.transpose() * DVector::from_vec(y);
        for i in 0..n {
            lhs[(i, i)] += tau * (1.0 - w[i]);
            rhs[i] += tau * (1.0 - w[i]) * mean[i];
        }
        let dense = lhs.lu().solve(&rhs).unwrap();
        let err = x.as_real().unwrap().iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn iterative_path_reaches_residual_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let (m, n) = (30, 15);
        let a: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0) / (m as f64).sqrt()).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fid = DataFidelity::new(Arc::new(MatrixOp::real(m, n, a).unwrap()), Tensor::vector(y)).unwrap();
        let prior = proximal_prior(Arc::new(L1Norm::new(0.3).unwrap()));
        let p = Problem::new(fid, Arc::new(prior), 1.0, 1.0).unwrap();
        let x = reference_zero(&p, &ReferenceOptions::default()).unwrap();
        let g0 = residual_g(&p, &p.fidelity().adjoint_image().unwrap(), false).unwrap().norm();
        assert!(residual_g(&p, &x, false).unwrap().norm() <= 1e-9 * (1.0 + g0));
    }

    #[test]
    fn cg_zero_rhs() {
        let out = conjugate_gradient(|v| Ok(v.to_vec()), &[0.0, 0.0], 1e-12, 10).unwrap();
        assert!(out.converged && out.x == vec![0.0, 0.0]);
    }
}
