//! Closed-form convergence constants and bounds, verification of traces
//! against them, randomized instance families, and parameter sweeps.

mod bounds;
mod family;
mod sweep;
mod verify;

pub use bounds::{
    check_tau_sigma, optimal_sigma_theorem4, theorem1_bound, theorem1_constants, theorem2_bound,
    theorem2_constants, theorem4_bound,
};
pub use family::{
    composite_minimum, family_registry, BoundCheck, FamilyParams, InstanceFamily, InstanceOutcome,
    LinearGaussianFamily, ProxPriorFamily, TheoryInstance, VerifyOptions,
};
pub use sweep::{run_sweep, SweepCell, SweepOutcome, SweepRow};
pub use verify::{
    empirical_r, verify_trace, BoundReport, BoundRow, BoundRule, ContractionRule, ResidualAverageRule,
    ObjectiveGapRule, DEFAULT_SLACK,
};
