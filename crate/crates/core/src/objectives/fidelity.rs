use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{estimate_spectral_norm, LinearOperator};
use crate::tensor::Tensor;

/// Least-squares data term `g(x) = 0.5 * ||y - A x||^2` with gradient
/// Lipschitz constant `L = ||A||^2`.
///
/// Images are constrained to be real, so for complex measurements the
/// gradient is the real part of `A^H (A x - y)`.
#[derive(Clone)]
pub struct DataFidelity {
    op: Arc<dyn LinearOperator>,
    measurements: Tensor,
    lipschitz: f64,
}

impl std::fmt::Debug for DataFidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataFidelity")
            .field("op", &self.op.name())
            .field("measurements", &self.measurements.shape())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DataFidelity {
    /// Builds the fidelity, estimating `L` by power iteration unless the
    /// operator knows its norm exactly.
    pub fn new(op: Arc<dyn LinearOperator>, measurements: Tensor) -> Result<Self> {
        let norm = match op.known_norm() {
            Some(n) => n,
            None => estimate_spectral_norm(op.as_ref(), 20_000, 1e-13)?,
        };
        Self::with_lipschitz(op, measurements, norm * norm)
    }

    pub fn with_lipschitz(
        op: Arc<dyn LinearOperator>,
        measurements: Tensor,
        lipschitz: f64,
    ) -> Result<Self> {
        measurements.check_shape(op.output_shape())?;
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::invalid(format!("invalid Lipschitz constant {lipschitz}")));
        }
        Ok(Self {
            op,
            measurements,
            lipschitz,
        })
    }

    pub fn operator(&self) -> &Arc<dyn LinearOperator> {
        &self.op
    }

    pub fn measurements(&self) -> &Tensor {
        &self.measurements
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn image_shape(&self) -> &[usize] {
        self.op.input_shape()
    }

    /// `0.5 * ||y - A x||^2`.
    pub fn eval(&self, x: &Tensor) -> Result<f64> {
        let r = self.op.forward(x)?.sub(&self.measurements)?;
        Ok(0.5 * r.norm_sq())
    }

    pub fn grad(&self, x: &Tensor) -> Result<Tensor> {
        let r = self.op.forward(x)?.sub(&self.measurements)?;
        let g = self.op.adjoint(&r)?;
        Ok(if x.is_complex() { g } else { g.real_part() })
    }

    /// Zero-filled (adjoint) image `Re(A^H y)`.
    pub fn adjoint_image(&self) -> Result<Tensor> {
        Ok(self.op.adjoint(&self.measurements)?.real_part())
    }
}

pub fn least_squares_eval(fid: &DataFidelity, x: &Tensor) -> Result<f64> {
    fid.eval(x)
}

pub fn least_squares_grad(fid: &DataFidelity, x: &Tensor) -> Result<Tensor> {
    fid.grad(x)
}
