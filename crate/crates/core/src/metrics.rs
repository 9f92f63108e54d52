//! Image quality metrics.

use crate::image::{ImageError, ImagePlane};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK: f64 = 255.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub ssim: f64,
    /// Decibels; `+inf` for identical images.
    pub psnr: f64,
    pub file_size: usize,
    pub csr: f64,
    pub step: f64,
}

impl QualityReport {
    pub fn measure(
        original: &ImagePlane,
        decoded: &ImagePlane,
        file_size: usize,
        csr: f64,
        step: f64,
    ) -> Result<Self, ImageError> {
        Ok(Self { ssim: ssim(original, decoded)?, psnr: psnr(original, decoded)?, file_size, csr, step })
    }
}

fn check_dims(a: &ImagePlane, b: &ImagePlane) -> Result<(), ImageError> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(ImageError::DimensionMismatch { left: (a.height(), a.width()), right: (b.height(), b.width()) });
    }
    Ok(())
}

pub fn mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64, ImageError> {
    check_dims(a, b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64, ImageError> {
    let e = mse(a, b)?;
    Ok(if e == 0.0 { f64::INFINITY } else { 10.0 * (PEAK * PEAK / e).log10() })
}

/// Normalized 1D Gaussian of `len` taps.
pub fn gaussian_kernel(len: usize, sigma: f64) -> Vec<f64> {
    let c = (len as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..len).map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Valid-region separable filtering of a row-major `h x w` plane.
fn filter_valid(data: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut horiz = vec![0.0; h * ow];
    for r in 0..h {
        let row = &data[r * w..(r + 1) * w];
        for c in 0..ow {
            horiz[r * ow + c] = row[c..c + n].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for (t, &kt) in k.iter().enumerate() {
            let src = &horiz[(r + t) * ow..(r + t + 1) * ow];
            for (o, &v) in out[r * ow..(r + 1) * ow].iter_mut().zip(src) {
                *o += kt * v;
            }
        }
    }
    out
}

/// Mean SSIM over all window positions that fit inside the image, with an
/// 11x11 Gaussian window (sigma 1.5). Smaller images use a window as large
/// as the shorter side.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64, ImageError> {
    check_dims(a, b)?;
    let (h, w) = (a.height(), a.width());
    let k = gaussian_kernel(WINDOW.min(h).min(w), SIGMA);
    let x: Vec<f64> = a.pixels().iter().map(|&p| f64::from(p)).collect();
    let y: Vec<f64> = b.pixels().iter().map(|&p| f64::from(p)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let maps = crate::parallel::map(&[&x, &y, &xx, &yy, &xy], |d| filter_valid(d, h, w, &k));
    let (mx, my, sxx, syy, sxy) = (&maps[0], &maps[1], &maps[2], &maps[3], &maps[4]);
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cxy = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}
