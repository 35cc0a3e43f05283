//! Linear measurement operators with explicit adjoints.

mod coil;
pub(crate) mod difference;
mod fourier;
mod mask;
mod spectral;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{Storage, Tensor};

pub use coil::{make_coil_operator, synthesize_sensitivities, CoilOperator};
pub use difference::{divergence, finite_difference, FiniteDifference};
pub use fourier::{make_fourier_subsampling, Fft2, FourierSubsampling, MaskStatus};
pub use mask::{make_radial_mask, SamplingMask};
pub use spectral::{estimate_spectral_norm, power_iteration, PowerIteration};

/// A linear map between tensor spaces together with its adjoint.
///
/// Implementors provide `forward_impl`/`adjoint_impl`; callers go through
/// [`LinearOperator::forward`] and [`LinearOperator::adjoint`], which check
/// shapes first.
pub trait LinearOperator: Send + Sync {
    fn name(&self) -> &str;
    fn input_shape(&self) -> &[usize];
    fn output_shape(&self) -> &[usize];

    fn forward_impl(&self, x: &Tensor) -> Tensor;
    fn adjoint_impl(&self, y: &Tensor) -> Tensor;

    /// Exact spectral norm when it is known in closed form.
    fn known_norm(&self) -> Option<f64> {
        None
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        x.check_shape(self.input_shape())?;
        Ok(self.forward_impl(x))
    }

    fn adjoint(&self, y: &Tensor) -> Result<Tensor> {
        y.check_shape(self.output_shape())?;
        Ok(self.adjoint_impl(y))
    }
}

pub fn apply_forward(op: &dyn LinearOperator, x: &Tensor) -> Result<Tensor> {
    op.forward(x)
}

pub fn apply_adjoint(op: &dyn LinearOperator, y: &Tensor) -> Result<Tensor> {
    op.adjoint(y)
}

#[derive(Debug, Clone)]
pub struct IdentityOp {
    shape: Vec<usize>,
}

impl IdentityOp {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
        }
    }
}

impl LinearOperator for IdentityOp {
    fn name(&self) -> &str {
        "identity"
    }
    fn input_shape(&self) -> &[usize] {
        &self.shape
    }
    fn output_shape(&self) -> &[usize] {
        &self.shape
    }
    fn forward_impl(&self, x: &Tensor) -> Tensor {
        x.clone()
    }
    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        y.clone()
    }
    fn known_norm(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Dense row-major matrix acting on vectors of shape `[cols]`.
#[derive(Debug, Clone)]
pub struct MatrixOp {
    rows: usize,
    cols: usize,
    input: [usize; 1],
    output: [usize; 1],
    entries: Storage,
}

impl MatrixOp {
    pub fn real(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            input: [cols],
            output: [rows],
            entries: Storage::Real(entries),
        })
    }

    pub fn complex(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            input: [cols],
            output: [rows],
            entries: Storage::Complex(entries),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn entry(&self, r: usize, c: usize) -> Complex64 {
        match &self.entries {
            Storage::Real(v) => Complex64::new(v[r * self.cols + c], 0.0),
            Storage::Complex(v) => v[r * self.cols + c],
        }
    }
}

impl LinearOperator for MatrixOp {
    fn name(&self) -> &str {
        "matrix"
    }
    fn input_shape(&self) -> &[usize] {
        &self.input
    }
    fn output_shape(&self) -> &[usize] {
        &self.output
    }

    fn forward_impl(&self, x: &Tensor) -> Tensor {
        if let (Storage::Real(m), Storage::Real(v)) = (&self.entries, x.storage()) {
            let out = m
                .chunks_exact(self.cols)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect();
            return Tensor::real(&self.output, out).expect("shape checked");
        }
        let v = x.to_complex_vec();
        let out = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.entry(r, c) * v[c]).sum())
            .collect();
        Tensor::complex(&self.output, out).expect("shape checked")
    }

    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        if let (Storage::Real(m), Storage::Real(v)) = (&self.entries, y.storage()) {
            let mut out = vec![0.0; self.cols];
            for (row, &yr) in m.chunks_exact(self.cols).zip(v) {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * yr;
                }
            }
            return Tensor::real(&self.input, out).expect("shape checked");
        }
        let v = y.to_complex_vec();
        let out = (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.entry(r, c).conj() * v[r]).sum())
            .collect();
        Tensor::complex(&self.input, out).expect("shape checked")
    }
}

/// The sampling projection `P` on its own (no Fourier transform).
#[derive(Debug, Clone)]
pub struct MaskOp {
    mask: SamplingMask,
}

impl MaskOp {
    pub fn new(mask: SamplingMask) -> Self {
        Self { mask }
    }
}

impl LinearOperator for MaskOp {
    fn name(&self) -> &str {
        "mask"
    }
    fn input_shape(&self) -> &[usize] {
        self.mask.shape()
    }
    fn output_shape(&self) -> &[usize] {
        self.mask.shape()
    }
    fn forward_impl(&self, x: &Tensor) -> Tensor {
        self.mask.apply(x)
    }
    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        self.mask.apply(y)
    }
    fn known_norm(&self) -> Option<f64> {
        Some(if self.mask.count() > 0 { 1.0 } else { 0.0 })
    }
}
