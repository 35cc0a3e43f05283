use super::Regularizer;
use crate::error::{Error, Result};
use crate::operators::difference::{divergence_into, gradient_into};
use crate::tensor::Tensor;

/// Inner solver settings for the TV proximal map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvSolverOptions {
    pub inner_iters: usize,
    /// Stop once the largest dual update falls below this.
    pub inner_tol: f64,
    /// Nesterov momentum on the dual (fast gradient projection).
    pub accelerated: bool,
}

impl Default for TvSolverOptions {
    fn default() -> Self {
        Self {
            inner_iters: 200,
            inner_tol: 1e-9,
            accelerated: false,
        }
    }
}

fn dims(x: &Tensor) -> Result<(usize, usize)> {
    match x.shape() {
        [h, w] => Ok((*h, *w)),
        other => Err(Error::invalid(format!("TV needs a 2-D image, got shape {other:?}"))),
    }
}

/// Anisotropic total variation `weight * ||D x||_1`.
pub fn tv_eval(weight: f64, x: &Tensor) -> Result<f64> {
    let (h, w) = dims(x)?;
    let mut g = vec![0.0; 2 * h * w];
    gradient_into(x.as_real()?, h, w, &mut g);
    Ok(weight * g.iter().map(|v| v.abs()).sum::<f64>())
}

/// `argmin_x 0.5 ||x - z||^2 + threshold * TV(x)` by projected gradient on
/// the dual `x = z + threshold * div(p)`, `|p|_inf <= 1`, with step 1/8
/// (`||div o grad|| <= 8` for this stencil).
pub fn prox_tv(threshold: f64, z: &Tensor, opts: &TvSolverOptions) -> Result<Tensor> {
    let (h, w) = dims(z)?;
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!("TV threshold must be nonnegative, got {threshold}")));
    }
    if opts.inner_iters == 0 {
        return Err(Error::invalid("TV prox needs inner_iters >= 1"));
    }
    let zv = z.as_real()?;
    if threshold == 0.0 {
        return Ok(z.clone());
    }
    let n = h * w;
    let step = 1.0 / (8.0 * threshold);
    let mut p = vec![0.0; 2 * n];
    // Extrapolated dual point (equals `p` without acceleration).
    let mut q = vec![0.0; 2 * n];
    let mut p_prev = vec![0.0; 2 * n];
    let mut x = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut grad = vec![0.0; 2 * n];
    let mut t = 1.0f64;

    for _ in 0..opts.inner_iters {
        divergence_into(&q, h, w, &mut div);
        for ((xi, &zi), &di) in x.iter_mut().zip(zv).zip(&div) {
            *xi = zi + threshold * di;
        }
        gradient_into(&x, h, w, &mut grad);
        p_prev.copy_from_slice(&p);
        let mut change = 0.0f64;
        for ((pi, &qi), (&gi, &old)) in p.iter_mut().zip(&q).zip(grad.iter().zip(&p_prev)) {
            *pi = (qi + step * gi).clamp(-1.0, 1.0);
            change = change.max((*pi - old).abs());
        }
        if opts.accelerated {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for ((qi, &pi), &old) in q.iter_mut().zip(&p).zip(&p_prev) {
                *qi = pi + beta * (pi - old);
            }
            t = t_next;
        } else {
            q.copy_from_slice(&p);
        }
        if change < opts.inner_tol {
            break;
        }
    }
    divergence_into(&p, h, w, &mut div);
    for ((xi, &zi), &di) in x.iter_mut().zip(zv).zip(&div) {
        *xi = zi + threshold * di;
    }
    Tensor::real(&[h, w], x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariation {
    weight: f64,
    options: TvSolverOptions,
}

impl TotalVariation {
    pub fn new(weight: f64, options: TvSolverOptions) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::invalid(format!("TV weight must be positive, got {weight}")));
        }
        Ok(Self { weight, options })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn options(&self) -> &TvSolverOptions {
        &self.options
    }
}

impl Regularizer for TotalVariation {
    fn name(&self) -> &str {
        "tv"
    }

    fn eval(&self, x: &Tensor) -> Result<f64> {
        tv_eval(self.weight, x)
    }

    fn prox(&self, z: &Tensor, mu: f64) -> Result<Tensor> {
        if !(mu >= 0.0) {
            return Err(Error::invalid(format!("prox parameter must be nonnegative, got {mu}")));
        }
        prox_tv(self.weight * mu, z, &self.options)
    }

    /// `weight * sqrt(2 H W)`: `||D x||_1 <= sqrt(2HW) ||D x||_2` and the
    /// subgradients of `|.|` are bounded by one per difference.
    fn lipschitz_bound(&self, shape: &[usize]) -> f64 {
        self.weight * (2.0 * shape.iter().product::<usize>() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(x: &Tensor, z: &Tensor, mu: f64) -> f64 {
        0.5 * x.distance(z).unwrap().powi(2) + tv_eval(mu, x).unwrap()
    }

    #[test]
    fn constant_image_is_fixed() {
        let z = Tensor::real(&[5, 6], vec![0.7; 30]).unwrap();
        assert_eq!(tv_eval(1.0, &z).unwrap(), 0.0);
        assert_eq!(prox_tv(0.3, &z, &TvSolverOptions::default()).unwrap(), z);
    }

    #[test]
    fn hand_tv_value() {
        let x = Tensor::real(&[2, 2], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tv_eval(1.0, &x).unwrap(), 2.0);
        assert!(tv_eval(1.0, &Tensor::vector(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn prox_beats_random_neighbourhood() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let z = Tensor::real(&[12, 10], (0..120).map(|_| rng.random_range(0.0..1.0)).collect())
            .unwrap();
        let mu = 0.15;
        let opts = TvSolverOptions {
            inner_iters: 5000,
            ..Default::default()
        };
        let x = prox_tv(mu, &z, &opts).unwrap();
        let fx = objective(&x, &z, mu);
        assert!(fx <= objective(&z, &z, mu));
        for _ in 0..50 {
            let nb = Tensor::real(
                &[12, 10],
                x.as_real()
                    .unwrap()
                    .iter()
                    .map(|v| v + rng.random_range(-1e-3..1e-3))
                    .collect(),
            )
            .unwrap();
            assert!(fx <= objective(&nb, &z, mu) + 1e-12);
        }
    }

    #[test]
    fn accelerated_and_plain_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let z = Tensor::real(&[8, 8], (0..64).map(|_| rng.random_range(0.0..1.0)).collect())
            .unwrap();
        let plain = prox_tv(
            0.1,
            &z,
            &TvSolverOptions {
                inner_iters: 20_000,
                inner_tol: 1e-13,
                accelerated: false,
            },
        )
        .unwrap();
        let fast = prox_tv(
            0.1,
            &z,
            &TvSolverOptions {
                inner_iters: 20_000,
                inner_tol: 1e-13,
                accelerated: true,
            },
        )
        .unwrap();
        assert!(plain.distance(&fast).unwrap() < 1e-6);
    }
}
