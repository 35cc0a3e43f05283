use num_complex::Complex64;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::tensor::{Storage, Tensor};

/// Forward differences with replicate boundary. `out` holds the horizontal
/// channel followed by the vertical channel, each `h * w` long.
pub(crate) fn gradient_into(x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let (gx, gy) = out.split_at_mut(h * w);
    for r in 0..h {
        let row = &x[r * w..(r + 1) * w];
        let gxr = &mut gx[r * w..(r + 1) * w];
        for c in 0..w - 1 {
            gxr[c] = row[c + 1] - row[c];
        }
        gxr[w - 1] = 0.0;
        if r + 1 < h {
            let next = &x[(r + 1) * w..(r + 2) * w];
            for c in 0..w {
                gy[r * w + c] = next[c] - row[c];
            }
        } else {
            gy[r * w..(r + 1) * w].fill(0.0);
        }
    }
}

/// Divergence, the negative adjoint of [`gradient_into`].
pub(crate) fn divergence_into(p: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let (px, py) = p.split_at(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut v = 0.0;
            if c + 1 < w {
                v += px[i];
            }
            if c > 0 {
                v -= px[i - 1];
            }
            if r + 1 < h {
                v += py[i];
            }
            if r > 0 {
                v -= py[i - w];
            }
            out[i] = v;
        }
    }
}

fn image_dims(x: &Tensor) -> Result<(usize, usize)> {
    match x.shape() {
        [h, w] => Ok((*h, *w)),
        other => Err(Error::invalid(format!(
            "expected a 2-D image, got shape {other:?}"
        ))),
    }
}

/// Stacked horizontal and vertical forward differences, shape `(2, H, W)`.
pub fn finite_difference(x: &Tensor) -> Result<Tensor> {
    let (h, w) = image_dims(x)?;
    let mut out = vec![0.0; 2 * h * w];
    gradient_into(x.as_real()?, h, w, &mut out);
    Tensor::real(&[2, h, w], out)
}

/// Divergence of a `(2, H, W)` field; `-divergence` is the adjoint of
/// [`finite_difference`].
pub fn divergence(p: &Tensor) -> Result<Tensor> {
    let (h, w) = match p.shape() {
        [2, h, w] => (*h, *w),
        other => {
            return Err(Error::invalid(format!(
                "expected a (2, H, W) field, got shape {other:?}"
            )))
        }
    };
    let mut out = vec![0.0; h * w];
    divergence_into(p.as_real()?, h, w, &mut out);
    Tensor::real(&[h, w], out)
}

/// Image gradient as a linear operator (used by TV).
#[derive(Debug, Clone)]
pub struct FiniteDifference {
    input: [usize; 2],
    output: [usize; 3],
}

impl FiniteDifference {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            input: [height, width],
            output: [2, height, width],
        }
    }

    fn split_apply(
        &self,
        x: &Tensor,
        out_shape: &[usize],
        out_len: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Tensor {
        match x.storage() {
            Storage::Real(v) => {
                let mut out = vec![0.0; out_len];
                f(v, &mut out);
                Tensor::real(out_shape, out).expect("shape checked")
            }
            Storage::Complex(v) => {
                let re: Vec<f64> = v.iter().map(|c| c.re).collect();
                let im: Vec<f64> = v.iter().map(|c| c.im).collect();
                let (mut ore, mut oim) = (vec![0.0; out_len], vec![0.0; out_len]);
                f(&re, &mut ore);
                f(&im, &mut oim);
                let out = ore
                    .into_iter()
                    .zip(oim)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect();
                Tensor::complex(out_shape, out).expect("shape checked")
            }
        }
    }
}

impl LinearOperator for FiniteDifference {
    fn name(&self) -> &str {
        "finite-difference"
    }
    fn input_shape(&self) -> &[usize] {
        &self.input
    }
    fn output_shape(&self) -> &[usize] {
        &self.output
    }

    fn forward_impl(&self, x: &Tensor) -> Tensor {
        let [h, w] = self.input;
        self.split_apply(x, &self.output, 2 * h * w, |src, dst| {
            gradient_into(src, h, w, dst)
        })
    }

    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        let [h, w] = self.input;
        self.split_apply(y, &self.input, h * w, |src, dst| {
            divergence_into(src, h, w, dst);
            dst.iter_mut().for_each(|v| *v = -*v);
        })
    }
}
