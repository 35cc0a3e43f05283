use crate::error::{Error, Result};
use crate::solver::check_step_size;

/// Contraction-regime constants `(eta, A)`:
/// `eta^2 = 1 - 2 gamma tau (1 - lambda) + gamma^2 (L + (1 + lambda) tau)^2`,
/// `A = gamma / (1 - eta)`.
pub fn theorem1_constants(lambda: f64, lipschitz: f64, tau: f64, gamma: f64) -> Result<(f64, f64)> {
    let upper = check_step_size(lambda, lipschitz, tau, gamma).contraction_upper;
    if !(lambda < 1.0) || !(gamma > 0.0 && gamma < upper) {
        return Err(Error::StepOutOfRange { gamma, upper });
    }
    let eta = (1.0 - 2.0 * gamma * tau * (1.0 - lambda)
        + (gamma * (lipschitz + (1.0 + lambda) * tau)).powi(2))
    .sqrt();
    Ok((eta, gamma / (1.0 - eta)))
}

/// `eta^t R0 + tau sigma epsilon A`.
pub fn theorem1_bound(t: usize, r0: f64, eta: f64, a: f64, tau: f64, sigma: f64, epsilon: f64) -> f64 {
    eta.powf(t as f64) * r0 + tau * sigma * epsilon * a
}

/// `B1 = (L + 2 tau) R^2 / gamma`, `B2 = (L + 2 tau)(2 R + gamma tau sigma epsilon)`.
pub fn theorem2_constants(
    lipschitz: f64,
    tau: f64,
    gamma: f64,
    r: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let upper = 1.0 / (lipschitz + 2.0 * tau);
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::StepOutOfRange { gamma, upper });
    }
    let c = lipschitz + 2.0 * tau;
    Ok((c * r * r / gamma, c * (2.0 * r + gamma * tau * sigma * epsilon)))
}

/// `B1 / t + tau sigma epsilon B2`; infinite at `t = 0`.
pub fn theorem2_bound(t: usize, b1: f64, b2: f64, tau: f64, sigma: f64, epsilon: f64) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    b1 / t as f64 + tau * sigma * epsilon * b2
}

/// Rejects `tau sigma^2 != 1` beyond a relative 1e-12.
pub fn check_tau_sigma(tau: f64, sigma: f64) -> Result<()> {
    if (tau * sigma * sigma - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "the objective bound needs tau = 1/sigma^2, got tau = {tau}, sigma = {sigma}"
        )));
    }
    Ok(())
}

/// `2 (L + 2 tau) R^3 / (gamma t) + epsilon^2 R / sigma^2 + S^2 sigma^2 / 2`.
#[allow(clippy::too_many_arguments)]
pub fn theorem4_bound(
    t: usize,
    lipschitz: f64,
    tau: f64,
    gamma: f64,
    r: f64,
    epsilon: f64,
    sigma: f64,
    s: f64,
) -> Result<f64> {
    check_tau_sigma(tau, sigma)?;
    let upper = 1.0 / (lipschitz + 2.0 * tau);
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::StepOutOfRange { gamma, upper });
    }
    let s2 = sigma * sigma;
    let transient = if t == 0 {
        f64::INFINITY
    } else {
        2.0 * (lipschitz + 2.0 * tau) * r.powi(3) / (gamma * t as f64)
    };
    Ok(transient + epsilon * epsilon * r / s2 + s * s * s2 / 2.0)
}

/// Minimizer `sigma^2 = sqrt(2 eps^2 R / S^2)` of `eps^2 R / sigma^2 + S^2 sigma^2 / 2`
/// and the minimum `eps S sqrt(2 R)`.
pub fn optimal_sigma_theorem4(epsilon: f64, r: f64, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("S must be positive, got {s}")));
    }
    if !(epsilon >= 0.0) || !(r >= 0.0) {
        return Err(Error::invalid("epsilon and R must be nonnegative"));
    }
    let sigma2 = (2.0 * epsilon * epsilon * r / (s * s)).sqrt();
    Ok((sigma2, epsilon * s * (2.0 * r).sqrt()))
}
