use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{Storage, Tensor};

/// Boolean k-space sampling pattern. Coordinates are centered: the DC
/// sample sits at `(H/2, W/2)` (integer division).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    shape: Vec<usize>,
    entries: Vec<bool>,
}

impl SamplingMask {
    pub fn new(shape: &[usize], entries: Vec<bool>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || n == 0 || entries.len() != n {
            return Err(Error::invalid(format!(
                "mask shape {shape:?} does not match {} entries",
                entries.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            entries,
        })
    }

    pub fn full(shape: &[usize]) -> Result<Self> {
        Self::new(shape, vec![true; shape.iter().product()])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn entries(&self) -> &[bool] {
        &self.entries
    }

    pub fn count(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.count() as f64 / self.entries.len() as f64
    }

    /// Zeroes every unsampled entry, preserving real/complex storage.
    pub fn apply(&self, x: &Tensor) -> Tensor {
        match x.storage() {
            Storage::Real(v) => {
                let out = v
                    .iter()
                    .zip(&self.entries)
                    .map(|(&a, &keep)| if keep { a } else { 0.0 })
                    .collect();
                Tensor::real(x.shape(), out).expect("same shape")
            }
            Storage::Complex(v) => {
                let zero = Complex64::new(0.0, 0.0);
                let out = v
                    .iter()
                    .zip(&self.entries)
                    .map(|(&a, &keep)| if keep { a } else { zero })
                    .collect();
                Tensor::complex(x.shape(), out).expect("same shape")
            }
        }
    }
}

/// Union of `num_lines` lines through the grid center at angles
/// `k * pi / num_lines`, rasterized one pixel per step along the dominant
/// axis with round-half-away-from-zero on the minor axis.
pub fn make_radial_mask(height: usize, width: usize, num_lines: usize) -> Result<SamplingMask> {
    if height < 2 || width < 2 {
        return Err(Error::invalid(format!(
            "radial mask needs at least 2x2, got {height}x{width}"
        )));
    }
    if num_lines == 0 {
        return Err(Error::invalid("radial mask needs at least one line"));
    }
    let (cy, cx) = ((height / 2) as f64, (width / 2) as f64);
    let mut entries = vec![false; height * width];
    for k in 0..num_lines {
        let theta = k as f64 * PI / num_lines as f64;
        let (dy, dx) = theta.sin_cos();
        if dx.abs() >= dy.abs() {
            let slope = dy / dx;
            for c in 0..width {
                let r = cy + ((c as f64 - cx) * slope).round();
                if r >= 0.0 && r < height as f64 {
                    entries[r as usize * width + c] = true;
                }
            }
        } else {
            let slope = dx / dy;
            for r in 0..height {
                let c = cx + ((r as f64 - cy) * slope).round();
                if c >= 0.0 && c < width as f64 {
                    entries[r * width + c as usize] = true;
                }
            }
        }
    }
    SamplingMask::new(&[height, width], entries)
}
