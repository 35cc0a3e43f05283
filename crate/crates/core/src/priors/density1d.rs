use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_NODES: usize = 4097;

const CONVEXITY_SLACK: f64 = 1e-10;
const REPORT_SLACK: f64 = 1e-6;

type NegLog = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Log-concave density `p(x) ∝ exp(-h(x))` on `[a, b]`, normalized by
/// composite Simpson quadrature. Construction certifies convexity of `h`
/// through nonnegative second differences on the grid.
#[derive(Clone)]
pub struct LogConcaveDensity1D {
    h: NegLog,
    a: f64,
    b: f64,
    nodes: usize,
    log_norm: f64,
}

impl std::fmt::Debug for LogConcaveDensity1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogConcaveDensity1D")
            .field("domain", &(self.a, self.b))
            .field("nodes", &self.nodes)
            .field("log_norm", &self.log_norm)
            .finish()
    }
}

impl LogConcaveDensity1D {
    pub fn new<F>(h: F, a: f64, b: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_nodes(h, a, b, DEFAULT_GRID_NODES)
    }

    /// `nodes` must be odd and at least 3 (Simpson's rule).
    pub fn with_nodes<F>(h: F, a: f64, b: f64, nodes: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("bad domain [{a}, {b}]")));
        }
        if nodes < 3 || nodes.is_multiple_of(2) {
            return Err(Error::invalid(format!("Simpson grid needs an odd node count >= 3, got {nodes}")));
        }
        let step = (b - a) / (nodes - 1) as f64;
        let values: Vec<f64> = (0..nodes).map(|i| h(a + i as f64 * step)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "negative log-density is not finite at x = {}",
                a + i as f64 * step
            )));
        }
        for i in 1..nodes - 1 {
            let second = values[i - 1] - 2.0 * values[i] + values[i + 1];
            if second < -CONVEXITY_SLACK {
                return Err(Error::NotLogConcave {
                    at: a + i as f64 * step,
                    value: second,
                });
            }
        }
        let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
        let integral = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let w = if i == 0 || i == nodes - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * (floor - v).exp()
            })
            .sum::<f64>()
            * step
            / 3.0;
        if !(integral > 0.0) || !integral.is_finite() {
            return Err(Error::invalid("density normalization quadrature failed"));
        }
        Ok(Self {
            h: Arc::new(h),
            a,
            b,
            nodes,
            log_norm: integral.ln() - floor,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.nodes - 1) as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.spacing();
        (0..self.nodes).map(move |i| self.a + i as f64 * step)
    }

    /// Unnormalized `h(x)`.
    pub fn neg_log(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    /// `-log p(x)` with the normalization constant folded in.
    pub fn normalized_neg_log(&self, x: f64) -> f64 {
        (self.h)(x) + self.log_norm
    }

    /// Central-difference `h'(x)` at the grid spacing.
    pub fn derivative(&self, x: f64) -> f64 {
        let d = self.spacing();
        ((self.h)(x + d) - (self.h)(x - d)) / (2.0 * d)
    }
}

/// `argmin_x 0.5 (x - z)^2 + sigma^2 h(x)` by bisection on the increasing
/// derivative, to 1e-10 in `x`. The minimizer must lie in the domain.
pub fn map_denoiser_1d(density: &LogConcaveDensity1D, sigma: f64, z: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let slope = |x: f64| (x - z) + s2 * density.derivative(x);
    let (mut lo, mut hi) = density.domain();
    if slope(lo) > 0.0 || slope(hi) < 0.0 {
        return Err(Error::invalid(format!(
            "MAP estimate for z = {z} falls outside the density domain [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest epsilon with `exp(-eps^2/2) <= r <= exp(eps^2/2)` given
/// `log_gap = sup |log r|`.
pub fn density_ratio_to_epsilon(log_gap: f64) -> Result<f64> {
    if !(log_gap >= 0.0) {
        return Err(Error::invalid(format!("log gap must be nonnegative, got {log_gap}")));
    }
    Ok((2.0 * log_gap).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRatioReport {
    pub log_gap: f64,
    pub epsilon: f64,
    /// `sigma * epsilon`.
    pub bound: f64,
    pub max_distance: f64,
    pub worst_z: f64,
    pub pass: bool,
}

/// Compares the MAP denoisers of two log-concave densities on the same
/// domain against the `sigma * epsilon` bound implied by their normalized
/// log-density gap (sup taken over the quadrature grid).
pub fn verify_theorem3_1d(
    h: &LogConcaveDensity1D,
    hhat: &LogConcaveDensity1D,
    sigma: f64,
    grid: &[f64],
) -> Result<DensityRatioReport> {
    if h.domain() != hhat.domain() || h.nodes() != hhat.nodes() {
        return Err(Error::invalid("densities must share domain and grid"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("need at least one evaluation point"));
    }
    let log_gap = h
        .grid()
        .map(|x| (h.normalized_neg_log(x) - hhat.normalized_neg_log(x)).abs())
        .fold(0.0, f64::max);
    let epsilon = density_ratio_to_epsilon(log_gap)?;
    let bound = sigma * epsilon;
    let mut max_distance = 0.0f64;
    let mut worst_z = grid[0];
    for &z in grid {
        let dist = (map_denoiser_1d(h, sigma, z)? - map_denoiser_1d(hhat, sigma, z)?).abs();
        if dist > max_distance {
            max_distance = dist;
            worst_z = z;
        }
    }
    Ok(DensityRatioReport {
        log_gap,
        epsilon,
        bound,
        max_distance,
        worst_z,
        pass: max_distance <= bound + REPORT_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> LogConcaveDensity1D {
        LogConcaveDensity1D::new(|x| x * x, -6.0, 6.0).unwrap()
    }

    #[test]
    fn normalization_of_a_gaussian() {
        // exp(-x^2) integrates to sqrt(pi); tails beyond 6 are negligible.
        let d = quadratic();
        assert!((d.normalized_neg_log(0.0) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn convexity_certificate() {
        let err = LogConcaveDensity1D::new(|x: f64| x.cos(), -3.0, 3.0).unwrap_err();
        assert!(matches!(err, Error::NotLogConcave { .. }));
        assert!(LogConcaveDensity1D::with_nodes(|x| x, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn map_examples() {
        let d = quadratic();
        assert!((map_denoiser_1d(&d, 1.0, 3.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((map_denoiser_1d(&d, 1e-9, 0.7).unwrap() - 0.7).abs() < 1e-10);
        let flat = LogConcaveDensity1D::new(|_| 2.5, -5.0, 5.0).unwrap();
        assert!((map_denoiser_1d(&flat, 3.0, -1.25).unwrap() + 1.25).abs() < 1e-10);
        assert!(map_denoiser_1d(&flat, 1.0, 9.0).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(density_ratio_to_epsilon(0.0).unwrap(), 0.0);
        assert!((density_ratio_to_epsilon(0.02).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(density_ratio_to_epsilon(0.5).unwrap(), 1.0);
        assert!(density_ratio_to_epsilon(-1e-3).is_err());
    }

    #[test]
    fn density_ratio_examples() {
        let zs: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
        let h = quadratic();
        let same = verify_theorem3_1d(&h, &quadratic(), 1.0, &zs).unwrap();
        assert_eq!((same.log_gap, same.max_distance), (0.0, 0.0));
        assert!(same.pass);

        let wobble = LogConcaveDensity1D::new(|x: f64| x * x + 0.005 * x.cos(), -6.0, 6.0).unwrap();
        let report = verify_theorem3_1d(&h, &wobble, 1.0, &zs).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.max_distance > 0.0 && report.log_gap > 0.0);

        let shifted = LogConcaveDensity1D::new(|x| x * x + 3.0, -6.0, 6.0).unwrap();
        let report = verify_theorem3_1d(&h, &shifted, 0.8, &zs).unwrap();
        assert!(report.log_gap < 1e-12 && report.max_distance == 0.0);
    }
}
