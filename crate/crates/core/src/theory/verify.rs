use serde::{Deserialize, Serialize};

use super::bounds::{
    check_tau_sigma, theorem1_bound, theorem1_constants, theorem2_bound, theorem2_constants,
    theorem4_bound,
};
use crate::error::{Error, Result};
use crate::solver::{IterateTrace, TraceRecord};

pub const DEFAULT_SLACK: f64 = 1e-9;

/// A per-iteration upper bound on a quantity measured from a trace.
pub trait BoundRule: Send + Sync {
    fn name(&self) -> &str;

    /// `(t, measured value)` for every iteration the bound applies to.
    fn measured(&self, trace: &IterateTrace) -> Result<Vec<(usize, f64)>>;

    fn bound(&self, t: usize) -> f64;

    fn constants(&self) -> Vec<(&'static str, f64)>;

    /// Floor for the relative-violation denominator, so round-off in a
    /// measured quantity that has converged is not judged against a bound
    /// that decays to zero.
    fn scale(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub iter: usize,
    pub measured: f64,
    pub bound: f64,
    /// `(measured - bound) / max(|bound|, scale)`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rule: String,
    pub constants: Vec<(&'static str, f64)>,
    pub rows: Vec<BoundRow>,
    pub max_violation: f64,
    pub slack: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn summary(&self) -> String {
        let consts: Vec<String> = self.constants.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        format!(
            "{} {}: max violation {:.3e} over {} rows ({})",
            self.rule,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_violation,
            self.rows.len(),
            consts.join(" ")
        )
    }
}

pub fn verify_trace(trace: &IterateTrace, rule: &dyn BoundRule, slack: f64) -> Result<BoundReport> {
    let scale = rule.scale();
    let rows: Vec<BoundRow> = rule
        .measured(trace)?
        .into_iter()
        .map(|(iter, measured)| {
            let bound = rule.bound(iter);
            let denom = bound.abs().max(scale).max(f64::MIN_POSITIVE);
            BoundRow {
                iter,
                measured,
                bound,
                violation: (measured - bound) / denom,
            }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid("trace has no iterations the bound applies to"));
    }
    let max_violation = rows.iter().map(|r| r.violation).fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundReport {
        rule: rule.name().to_owned(),
        constants: rule.constants(),
        rows,
        max_violation,
        slack,
        pass: max_violation <= slack,
    })
}

/// `max_k ||x^k - x*||` over the recorded iterates.
pub fn empirical_r(trace: &IterateTrace) -> Result<f64> {
    trace
        .records
        .iter()
        .map(|r| r.dist_to_ref.ok_or(Error::MissingColumn("dist_to_ref")))
        .try_fold(0.0f64, |m, d| Ok(m.max(d?)))
}

/// `R` for bounds that need it: the running max over every iterate when the
/// solver tracked it, else the max over recorded iterates.
fn trace_r(trace: &IterateTrace) -> Result<f64> {
    match trace.r_max {
        Some(r) => Ok(r),
        None => empirical_r(trace),
    }
}

/// Every record at iterations `0..=last`, in order, without gaps.
fn contiguous(records: &[TraceRecord]) -> Result<()> {
    if records.iter().enumerate().any(|(i, r)| r.iter != i) {
        return Err(Error::invalid("this bound needs a trace recorded at every iteration"));
    }
    Ok(())
}

/// Distance to the true zero under a contractive prior:
/// `||x^t - x*|| <= eta^t R0 + tau sigma epsilon A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRule {
    pub eta: f64,
    pub a: f64,
    pub r0: f64,
    pub tau: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl ContractionRule {
    pub fn new(
        lambda: f64,
        lipschitz: f64,
        tau: f64,
        gamma: f64,
        sigma: f64,
        epsilon: f64,
        trace: &IterateTrace,
    ) -> Result<Self> {
        let (eta, a) = theorem1_constants(lambda, lipschitz, tau, gamma)?;
        let r0 = trace.r0.ok_or(Error::MissingColumn("dist_to_ref"))?;
        Ok(Self { eta, a, r0, tau, sigma, epsilon })
    }

    /// Multiplies `A` by `factor`; a negative control for the harness.
    pub fn scale_a(mut self, factor: f64) -> Self {
        self.a *= factor;
        self
    }
}

impl BoundRule for ContractionRule {
    fn name(&self) -> &str {
        "distance-to-zero"
    }

    fn measured(&self, trace: &IterateTrace) -> Result<Vec<(usize, f64)>> {
        trace
            .records
            .iter()
            .map(|r| Ok((r.iter, r.dist_to_ref.ok_or(Error::MissingColumn("dist_to_ref"))?)))
            .collect()
    }

    fn bound(&self, t: usize) -> f64 {
        theorem1_bound(t, self.r0, self.eta, self.a, self.tau, self.sigma, self.epsilon)
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("eta", self.eta),
            ("A", self.a),
            ("R0", self.r0),
            ("tau", self.tau),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
        ]
    }

    fn scale(&self) -> f64 {
        self.r0
    }
}

/// Running average of the true residual under a nonexpansive prior:
/// `(1/t) sum_{i=1..t} ||G(x^{i-1})||^2 <= B1/t + tau sigma epsilon B2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualAverageRule {
    pub b1: f64,
    pub b2: f64,
    pub r: f64,
    pub tau: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl ResidualAverageRule {
    pub fn new(lipschitz: f64, tau: f64, gamma: f64, sigma: f64, epsilon: f64, trace: &IterateTrace) -> Result<Self> {
        let r = trace_r(trace)?;
        let (b1, b2) = theorem2_constants(lipschitz, tau, gamma, r, sigma, epsilon)?;
        Ok(Self { b1, b2, r, tau, sigma, epsilon })
    }
}

impl BoundRule for ResidualAverageRule {
    fn name(&self) -> &str {
        "residual-average"
    }

    fn measured(&self, trace: &IterateTrace) -> Result<Vec<(usize, f64)>> {
        contiguous(&trace.records)?;
        let mut sum = 0.0;
        Ok(trace
            .records
            .iter()
            .take(trace.records.len().saturating_sub(1))
            .enumerate()
            .map(|(i, r)| {
                sum += r.g_norm_sq;
                let t = i + 1;
                (t, sum / t as f64)
            })
            .collect())
    }

    fn bound(&self, t: usize) -> f64 {
        theorem2_bound(t, self.b1, self.b2, self.tau, self.sigma, self.epsilon)
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("B1", self.b1),
            ("B2", self.b2),
            ("R", self.r),
            ("tau", self.tau),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
        ]
    }
}

/// Best objective gap for a proximal prior with `tau = 1/sigma^2`:
/// `min_{i<=t} f(x^{i-1}) - f* <= 2(L+2tau)R^3/(gamma t) + eps^2 R/sigma^2 + S^2 sigma^2/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGapRule {
    pub lipschitz: f64,
    pub tau: f64,
    pub gamma: f64,
    pub r: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub s: f64,
    pub f_star: f64,
}

impl ObjectiveGapRule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lipschitz: f64,
        tau: f64,
        gamma: f64,
        sigma: f64,
        epsilon: f64,
        s: f64,
        f_star: f64,
        trace: &IterateTrace,
    ) -> Result<Self> {
        check_tau_sigma(tau, sigma)?;
        let r = trace_r(trace)?;
        let rule = Self { lipschitz, tau, gamma, r, epsilon, sigma, s, f_star };
        theorem4_bound(1, lipschitz, tau, gamma, r, epsilon, sigma, s)?;
        Ok(rule)
    }
}

impl BoundRule for ObjectiveGapRule {
    fn name(&self) -> &str {
        "objective-gap"
    }

    fn measured(&self, trace: &IterateTrace) -> Result<Vec<(usize, f64)>> {
        contiguous(&trace.records)?;
        let mut best = f64::INFINITY;
        trace
            .records
            .iter()
            .take(trace.records.len().saturating_sub(1))
            .enumerate()
            .map(|(i, r)| {
                let f = r.objective.ok_or(Error::MissingColumn("objective"))?;
                best = best.min(f - self.f_star);
                Ok((i + 1, best))
            })
            .collect()
    }

    fn bound(&self, t: usize) -> f64 {
        theorem4_bound(t, self.lipschitz, self.tau, self.gamma, self.r, self.epsilon, self.sigma, self.s)
            .expect("parameters validated at construction")
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("L", self.lipschitz),
            ("tau", self.tau),
            ("gamma", self.gamma),
            ("R", self.r),
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("S", self.s),
            ("f_star", self.f_star),
        ]
    }
}
