//! Data-fidelity terms, convex regularizers with proximal maps, and Moreau
//! envelope utilities.

mod fidelity;
mod l1;
mod moreau;
mod tv;

use std::fmt::Debug;

use crate::error::Result;
use crate::tensor::Tensor;

pub use fidelity::{least_squares_eval, least_squares_grad, DataFidelity};
pub use l1::{l1_eval, prox_l1, soft_threshold, L1Norm};
pub use moreau::{moreau_envelope, moreau_gradient};
pub use tv::{prox_tv, tv_eval, TotalVariation, TvSolverOptions};

/// A closed proper convex function `h` with a computable proximal map.
pub trait Regularizer: Send + Sync + Debug {
    fn name(&self) -> &str;

    fn eval(&self, x: &Tensor) -> Result<f64>;

    /// `argmin_v 0.5 * ||v - z||^2 + mu * h(v)`.
    fn prox(&self, z: &Tensor, mu: f64) -> Result<Tensor>;

    /// Lipschitz constant `S` of `h` on tensors of the given shape.
    fn lipschitz_bound(&self, shape: &[usize]) -> f64;
}
