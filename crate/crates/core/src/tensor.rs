//! Dense row-major tensors holding either real or complex doubles.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A dense n-dimensional array with an explicit shape.
///
/// Images are real; k-space measurements are complex. Operations that mix
/// the two promote to complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Storage,
}

fn element_count(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::invalid(format!(
            "shape must have positive dimensions, got {shape:?}"
        )));
    }
    Ok(shape.iter().product())
}

impl Tensor {
    pub fn real(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = element_count(shape)?;
        if data.len() != n {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: Storage::Real(data),
        })
    }

    pub fn complex(shape: &[usize], data: Vec<Complex64>) -> Result<Self> {
        let n = element_count(shape)?;
        if data.len() != n {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: Storage::Complex(data),
        })
    }

    /// Builds a real vector tensor of shape `[len]`. Panics on empty input.
    pub fn vector(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "vector tensor needs at least one element");
        Self {
            shape: vec![data.len()],
            data: Storage::Real(data),
        }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = element_count(shape)?;
        Self::real(shape, vec![0.0; n])
    }

    pub fn zeros_complex(shape: &[usize]) -> Result<Self> {
        let n = element_count(shape)?;
        Self::complex(shape, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        match &self.data {
            Storage::Real(v) => v.len(),
            Storage::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.data, Storage::Complex(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.data
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match &self.data {
            Storage::Real(v) => Ok(v),
            Storage::Complex(_) => Err(Error::ComplexNotSupported),
        }
    }

    pub fn as_real_mut(&mut self) -> Result<&mut [f64]> {
        match &mut self.data {
            Storage::Real(v) => Ok(v),
            Storage::Complex(_) => Err(Error::ComplexNotSupported),
        }
    }

    pub fn as_complex(&self) -> Option<&[Complex64]> {
        match &self.data {
            Storage::Complex(v) => Some(v),
            Storage::Real(_) => None,
        }
    }

    pub fn into_real_vec(self) -> Result<Vec<f64>> {
        match self.data {
            Storage::Real(v) => Ok(v),
            Storage::Complex(_) => Err(Error::ComplexNotSupported),
        }
    }

    /// Copies the elements as complex numbers (real data gets zero imaginary part).
    pub fn to_complex_vec(&self) -> Vec<Complex64> {
        match &self.data {
            Storage::Real(v) => v.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            Storage::Complex(v) => v.clone(),
        }
    }

    pub fn to_complex(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: Storage::Complex(self.to_complex_vec()),
        }
    }

    /// Real part; a no-op copy for real tensors.
    pub fn real_part(&self) -> Tensor {
        let data = match &self.data {
            Storage::Real(v) => v.clone(),
            Storage::Complex(v) => v.iter().map(|c| c.re).collect(),
        };
        Tensor {
            shape: self.shape.clone(),
            data: Storage::Real(data),
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = element_count(shape)?;
        if n != self.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                actual: self.shape,
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn check_shape(&self, expected: &[usize]) -> Result<()> {
        if self.shape != expected {
            return Err(Error::ShapeMismatch {
                expected: expected.to_vec(),
                actual: self.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        match &self.data {
            Storage::Real(v) => v.iter().map(|a| a * a).sum(),
            Storage::Complex(v) => v.iter().map(|c| c.norm_sqr()).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Hermitian inner product `sum(conj(self) * other)`.
    pub fn inner(&self, other: &Tensor) -> Result<Complex64> {
        other.check_shape(&self.shape)?;
        Ok(match (&self.data, &other.data) {
            (Storage::Real(a), Storage::Real(b)) => {
                Complex64::new(a.iter().zip(b).map(|(x, y)| x * y).sum(), 0.0)
            }
            _ => self
                .to_complex_vec()
                .iter()
                .zip(other.to_complex_vec())
                .map(|(x, y)| x.conj() * y)
                .sum(),
        })
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            Storage::Real(v) => v.iter().all(|a| a.is_finite()),
            Storage::Complex(v) => v.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
        }
    }

    pub fn scale(&self, alpha: f64) -> Tensor {
        let data = match &self.data {
            Storage::Real(v) => Storage::Real(v.iter().map(|a| a * alpha).collect()),
            Storage::Complex(v) => Storage::Complex(v.iter().map(|c| c * alpha).collect()),
        };
        Tensor {
            shape: self.shape.clone(),
            data,
        }
    }

    /// `alpha * self + beta * other`, promoting to complex if either side is.
    pub fn lincomb(&self, alpha: f64, other: &Tensor, beta: f64) -> Result<Tensor> {
        other.check_shape(&self.shape)?;
        let data = match (&self.data, &other.data) {
            (Storage::Real(a), Storage::Real(b)) => Storage::Real(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| alpha * x + beta * y)
                    .collect(),
            ),
            _ => Storage::Complex(
                self.to_complex_vec()
                    .iter()
                    .zip(other.to_complex_vec())
                    .map(|(x, y)| x * alpha + y * beta)
                    .collect(),
            ),
        };
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn distance(&self, other: &Tensor) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Raw little-endian bytes of the payload, used for content hashing.
    pub fn payload_bytes(&self) -> Vec<u8> {
        match &self.data {
            Storage::Real(v) => v.iter().flat_map(|a| a.to_le_bytes()).collect(),
            Storage::Complex(v) => v
                .iter()
                .flat_map(|c| c.re.to_le_bytes().into_iter().chain(c.im.to_le_bytes()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_count_must_match_shape() {
        assert!(Tensor::real(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::real(&[2, 0], vec![]).is_err());
        assert_eq!(Tensor::real(&[2, 3], vec![0.0; 6]).unwrap().len(), 6);
    }

    #[test]
    fn mixed_lincomb_promotes_to_complex() {
        let a = Tensor::vector(vec![1.0, 2.0]);
        let b = Tensor::complex(&[2], vec![Complex64::new(0.0, 1.0); 2]).unwrap();
        let c = a.lincomb(2.0, &b, 1.0).unwrap();
        assert!(c.is_complex());
        assert_eq!(c.as_complex().unwrap()[1], Complex64::new(4.0, 1.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = Tensor::complex(&[1], vec![Complex64::new(0.0, 1.0)]).unwrap();
        let b = Tensor::complex(&[1], vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), Complex64::new(0.0, -1.0));
    }
}
