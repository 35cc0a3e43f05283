use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{LinearOperator, SamplingMask};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Unitary 2-D DFT (scaled by `1/sqrt(H*W)` in both directions).
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.height, self.width)
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_inv, &self.col_inv);
    }

    fn transform(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        debug_assert_eq!(data.len(), h * w);
        rows.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = data[r * w + c];
            }
            cols.process(&mut column);
            for r in 0..h {
                data[r * w + c] = column[r];
            }
        }
        let scale = 1.0 / ((h * w) as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskStatus {
    Ok,
    /// No samples at all; the operator is identically zero.
    EmptyMask,
}

/// `A = P F`: unitary 2-D DFT followed by k-space sampling.
///
/// The output lives on the full `(H, W)` grid in centered layout (DC at
/// `(H/2, W/2)`), with zeros at unsampled locations.
#[derive(Debug, Clone)]
pub struct FourierSubsampling {
    shape: Vec<usize>,
    mask: SamplingMask,
    /// `shift[i]` is the unshifted FFT index that lands at centered index `i`.
    shift: Vec<usize>,
    fft: Fft2,
}

pub(crate) fn centered_index_map(height: usize, width: usize) -> Vec<usize> {
    let (hh, hw) = (height / 2, width / 2);
    let mut map = Vec::with_capacity(height * width);
    for r in 0..height {
        let ur = (r + height - hh) % height;
        for c in 0..width {
            let uc = (c + width - hw) % width;
            map.push(ur * width + uc);
        }
    }
    map
}

impl FourierSubsampling {
    pub fn status(&self) -> MaskStatus {
        if self.mask.count() == 0 {
            MaskStatus::EmptyMask
        } else {
            MaskStatus::Ok
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub(crate) fn sample(&self, spectrum: &[Complex64], out: &mut [Complex64]) {
        for ((o, &src), &keep) in out.iter_mut().zip(&self.shift).zip(self.mask.entries()) {
            *o = if keep { spectrum[src] } else { Complex64::new(0.0, 0.0) };
        }
    }

    pub(crate) fn unsample(&self, y: &[Complex64], spectrum: &mut [Complex64]) {
        for ((&v, &dst), &keep) in y.iter().zip(&self.shift).zip(self.mask.entries()) {
            spectrum[dst] = if keep { v } else { Complex64::new(0.0, 0.0) };
        }
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.fft
    }
}

pub fn make_fourier_subsampling(mask: SamplingMask) -> Result<FourierSubsampling> {
    if mask.shape().len() != 2 {
        return Err(Error::invalid("Fourier sampling mask must be 2-D"));
    }
    let (h, w) = (mask.shape()[0], mask.shape()[1]);
    let op = FourierSubsampling {
        shape: vec![h, w],
        shift: centered_index_map(h, w),
        fft: Fft2::new(h, w),
        mask,
    };
    if op.status() == MaskStatus::EmptyMask {
        log::warn!("Fourier sampling mask is empty; the operator is identically zero");
    }
    Ok(op)
}

impl LinearOperator for FourierSubsampling {
    fn name(&self) -> &str {
        "fourier-subsampling"
    }
    fn input_shape(&self) -> &[usize] {
        &self.shape
    }
    fn output_shape(&self) -> &[usize] {
        &self.shape
    }

    fn forward_impl(&self, x: &Tensor) -> Tensor {
        let mut spectrum = x.to_complex_vec();
        self.fft.forward(&mut spectrum);
        let mut out = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        self.sample(&spectrum, &mut out);
        Tensor::complex(&self.shape, out).expect("shape checked")
    }

    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        let y = y.to_complex_vec();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); y.len()];
        self.unsample(&y, &mut spectrum);
        self.fft.inverse(&mut spectrum);
        Tensor::complex(&self.shape, spectrum).expect("shape checked")
    }

    fn known_norm(&self) -> Option<f64> {
        Some(if self.mask.count() > 0 { 1.0 } else { 0.0 })
    }
}
