use std::f64::consts::PI;

use num_complex::Complex64;

use super::fourier::{make_fourier_subsampling, FourierSubsampling};
use super::{LinearOperator, SamplingMask};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Stacked multi-coil operator: `x -> [P F (S_1 x); ...; P F (S_C x)]`.
#[derive(Debug, Clone)]
pub struct CoilOperator {
    image_shape: Vec<usize>,
    output_shape: Vec<usize>,
    sensitivities: Vec<Vec<Complex64>>,
    inner: FourierSubsampling,
}

pub fn make_coil_operator(mask: SamplingMask, sensitivities: &[Tensor]) -> Result<CoilOperator> {
    if sensitivities.is_empty() {
        return Err(Error::invalid("coil operator needs at least one sensitivity map"));
    }
    let image_shape = mask.shape().to_vec();
    for (i, s) in sensitivities.iter().enumerate() {
        if s.shape() != image_shape.as_slice() {
            return Err(Error::invalid(format!(
                "sensitivity map {i} has shape {:?}, expected {image_shape:?}",
                s.shape()
            )));
        }
    }
    let output_shape = vec![sensitivities.len(), image_shape[0], image_shape[1]];
    Ok(CoilOperator {
        sensitivities: sensitivities.iter().map(Tensor::to_complex_vec).collect(),
        inner: make_fourier_subsampling(mask)?,
        image_shape,
        output_shape,
    })
}

impl CoilOperator {
    pub fn coils(&self) -> usize {
        self.sensitivities.len()
    }
}

impl LinearOperator for CoilOperator {
    fn name(&self) -> &str {
        "coil-fourier-subsampling"
    }
    fn input_shape(&self) -> &[usize] {
        &self.image_shape
    }
    fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    fn forward_impl(&self, x: &Tensor) -> Tensor {
        let x = x.to_complex_vec();
        let n = x.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * self.coils()];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (sens, chunk) in self.sensitivities.iter().zip(out.chunks_exact_mut(n)) {
            for ((b, s), v) in buf.iter_mut().zip(sens).zip(&x) {
                *b = s * v;
            }
            self.inner.fft().forward(&mut buf);
            self.inner.sample(&buf, chunk);
        }
        Tensor::complex(&self.output_shape, out).expect("shape checked")
    }

    fn adjoint_impl(&self, y: &Tensor) -> Tensor {
        let y = y.to_complex_vec();
        let n = y.len() / self.coils();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (sens, chunk) in self.sensitivities.iter().zip(y.chunks_exact(n)) {
            self.inner.unsample(chunk, &mut buf);
            self.inner.fft().inverse(&mut buf);
            for ((a, s), b) in acc.iter_mut().zip(sens).zip(&buf) {
                *a += s.conj() * b;
            }
        }
        Tensor::complex(&self.image_shape, acc).expect("shape checked")
    }
}

/// Gaussian-bump coil maps centered at evenly spaced points on the image
/// boundary circle, each with a constant phase, normalized so that
/// `sum_i |S_i|^2 == 1` at every pixel.
pub fn synthesize_sensitivities(height: usize, width: usize, coils: usize) -> Result<Vec<Tensor>> {
    if coils == 0 || height == 0 || width == 0 {
        return Err(Error::invalid("need positive image size and coil count"));
    }
    let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let radius = height.max(width) as f64 / 2.0;
    let spread = radius;
    let mut maps: Vec<Vec<Complex64>> = (0..coils)
        .map(|i| {
            let angle = 2.0 * PI * i as f64 / coils as f64;
            let (py, px) = (cy + radius * angle.sin(), cx + radius * angle.cos());
            let phase = Complex64::from_polar(1.0, angle);
            (0..height * width)
                .map(|k| {
                    let (r, c) = ((k / width) as f64, (k % width) as f64);
                    let d2 = (r - py).powi(2) + (c - px).powi(2);
                    phase * (-d2 / (2.0 * spread * spread)).exp()
                })
                .collect()
        })
        .collect();
    for k in 0..height * width {
        let total: f64 = maps.iter().map(|m| m[k].norm_sqr()).sum::<f64>().sqrt();
        for m in maps.iter_mut() {
            m[k] /= total;
        }
    }
    maps.into_iter()
        .map(|m| Tensor::complex(&[height, width], m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::tests::{assert_adjoint, random_tensor};
    use crate::operators::{make_radial_mask, FiniteDifference};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_coil_matches_single_channel() {
        let mask = make_radial_mask(8, 8, 3).unwrap();
        let ones = Tensor::real(&[8, 8], vec![1.0; 64]).unwrap();
        let coil = make_coil_operator(mask.clone(), &[ones]).unwrap();
        let plain = make_fourier_subsampling(mask).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&[8, 8], false, &mut rng);
        let a = coil.forward(&x).unwrap().reshape(&[8, 8]).unwrap();
        let b = plain.forward(&x).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-14);
    }

    #[test]
    fn stacking_two_unit_coils_doubles_energy() {
        let ones = Tensor::real(&[6, 6], vec![1.0; 36]).unwrap();
        let op = make_coil_operator(SamplingMask::full(&[6, 6]).unwrap(), &[ones.clone(), ones])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_tensor(&[6, 6], false, &mut rng);
        let y = op.forward(&x).unwrap();
        assert!((y.norm_sq() - 2.0 * x.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn adjointness_with_synthesized_maps() {
        let maps = synthesize_sensitivities(10, 8, 4).unwrap();
        let op = make_coil_operator(make_radial_mask(10, 8, 4).unwrap(), &maps).unwrap();
        assert_adjoint(&op, 100, 6);
        assert_adjoint(&FiniteDifference::new(5, 7), 100, 8);
    }

    #[test]
    fn synthesized_maps_are_normalized() {
        let maps = synthesize_sensitivities(9, 9, 3).unwrap();
        for k in 0..81 {
            let s: f64 = maps.iter().map(|m| m.as_complex().unwrap()[k].norm_sqr()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_map_shape_rejected() {
        let bad = Tensor::real(&[4, 5], vec![1.0; 20]).unwrap();
        assert!(make_coil_operator(SamplingMask::full(&[4, 4]).unwrap(), &[bad]).is_err());
        assert!(make_coil_operator(SamplingMask::full(&[4, 4]).unwrap(), &[]).is_err());
    }
}
