//! Image-quality metrics and a deterministic head phantom.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const SSIM_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    /// `+inf` for identical inputs.
    pub psnr: f64,
    pub ssim: f64,
    pub peak: f64,
}

fn check_peak(peak: f64) -> Result<()> {
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    Ok(())
}

/// `10 log10(peak^2 / MSE)`, `+inf` when the inputs are identical.
pub fn psnr(reference: &Tensor, estimate: &Tensor, peak: f64) -> Result<f64> {
    check_peak(peak)?;
    estimate.check_shape(reference.shape())?;
    let mse = estimate.sub(reference)?.norm_sq() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean SSIM over every 8x8 window (stride one) with uniform weights and
/// population moments.
pub fn ssim(reference: &Tensor, estimate: &Tensor, peak: f64) -> Result<f64> {
    check_peak(peak)?;
    estimate.check_shape(reference.shape())?;
    let (h, w) = match reference.shape() {
        [h, w] => (*h, *w),
        other => return Err(Error::invalid(format!("SSIM needs 2-D images, got {other:?}"))),
    };
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "image {h}x{w} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let a = reference.as_real()?;
    let b = estimate.as_real()?;
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let count = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for i in 0..=h - SSIM_WINDOW {
        for j in 0..=w - SSIM_WINDOW {
            let (mut sa, mut sb) = (0.0, 0.0);
            for r in i..i + SSIM_WINDOW {
                for c in j..j + SSIM_WINDOW {
                    sa += a[r * w + c];
                    sb += b[r * w + c];
                }
            }
            let (ma, mb) = (sa / count, sb / count);
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for r in i..i + SSIM_WINDOW {
                for c in j..j + SSIM_WINDOW {
                    let da = a[r * w + c] - ma;
                    let db = b[r * w + c] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            let (va, vb, cov) = (va / count, vb / count, cov / count);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

pub fn quality(reference: &Tensor, estimate: &Tensor, peak: f64) -> Result<QualityScore> {
    Ok(QualityScore {
        psnr: psnr(reference, estimate, peak)?,
        ssim: ssim(reference, estimate, peak)?,
        peak,
    })
}

/// Largest value of a real tensor, the default PSNR peak.
pub fn default_peak(reference: &Tensor) -> Result<f64> {
    Ok(reference
        .as_real()?
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

// (intensity, semi-axis a, semi-axis b, center x, center y, rotation in degrees)
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Modified Shepp-Logan phantom on a `size x size` grid, clamped to [0, 1].
pub fn make_phantom(size: usize) -> Result<Tensor> {
    if size < 32 {
        return Err(Error::invalid(format!("phantom size must be at least 32, got {size}")));
    }
    let n = size as f64;
    let mut img = vec![0.0; size * size];
    for (i, row) in img.chunks_mut(size).enumerate() {
        let y = 1.0 - (2.0 * i as f64 + 1.0) / n;
        for (j, px) in row.iter_mut().enumerate() {
            let x = (2.0 * j as f64 + 1.0) / n - 1.0;
            let mut v = 0.0;
            for &[rho, a, b, x0, y0, deg] in &SHEPP_LOGAN {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * c + dy * s;
                let t = -dx * s + dy * c;
                if (u / a).powi(2) + (t / b).powi(2) <= 1.0 {
                    v += rho;
                }
            }
            *px = v.clamp(0.0, 1.0);
        }
    }
    Tensor::real(&[size, size], img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Tensor {
        Tensor::real(&[h, w], (0..h * w).map(|k| ((k * 37) % 101) as f64 / 100.0).collect()).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let r = ramp(16, 16);
        assert_eq!(psnr(&r, &r, 1.0).unwrap(), f64::INFINITY);
        let shifted = Tensor::real(&[16, 16], r.as_real().unwrap().iter().map(|v| v + 0.1).collect())
            .unwrap();
        assert!((psnr(&r, &shifted, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let far = Tensor::real(&[16, 16], r.as_real().unwrap().iter().map(|v| v + 1.0).collect())
            .unwrap();
        assert!(psnr(&r, &far, 1.0).unwrap().abs() < 1e-12);
        assert!(psnr(&r, &ramp(4, 4), 1.0).is_err());
    }

    #[test]
    fn ssim_examples() {
        let r = ramp(16, 16);
        assert!((ssim(&r, &r, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // Checkerboard is zero-mean on every window.
        let board = Tensor::real(
            &[16, 16],
            (0..256).map(|k| if (k / 16 + k % 16) % 2 == 0 { 0.5 } else { -0.5 }).collect(),
        )
        .unwrap();
        assert!(ssim(&board, &board.scale(-1.0), 1.0).unwrap() <= 0.0);
        let noisy = Tensor::real(
            &[16, 16],
            r.as_real().unwrap().iter().enumerate().map(|(k, v)| v + 1e-6 * ((k % 3) as f64 - 1.0)).collect(),
        )
        .unwrap();
        assert!(ssim(&r, &noisy, 1.0).unwrap() >= 0.9999);
        assert!(ssim(&ramp(4, 4), &ramp(4, 4), 1.0).is_err());
    }

    #[test]
    fn phantom_geometry() {
        let p = make_phantom(128).unwrap();
        let v = p.as_real().unwrap();
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        for idx in [0, 127, 127 * 128, 128 * 128 - 1] {
            assert_eq!(v[idx], 0.0);
        }
        assert_eq!(p, make_phantom(128).unwrap());
        assert_eq!(default_peak(&p).unwrap(), 1.0);
        assert!(make_phantom(16).is_err());
    }
}
