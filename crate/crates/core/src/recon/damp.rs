use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::tv::tv_denoise;
use super::{relative_change, to_image, DenoiserKind, ReconConfig, ReconError};
use crate::image::ImagePlane;
use crate::sensing::LinearOperator;

/// A denoiser `D_sigma` acting on a column-major canvas.
pub trait Denoiser: Sync {
    fn denoise(&self, v: &[f64], grid: (usize, usize), sigma: f64) -> Vec<f64>;
}

pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn denoise(&self, v: &[f64], _grid: (usize, usize), _sigma: f64) -> Vec<f64> {
        v.to_vec()
    }
}

/// TV proximal step with weight `weight_per_sigma * sigma`.
#[derive(Clone, Debug)]
pub struct TvDenoiser {
    pub weight_per_sigma: f64,
    pub inner_iters: usize,
}

impl Default for TvDenoiser {
    fn default() -> Self {
        Self { weight_per_sigma: 0.5, inner_iters: super::DEFAULT_INNER_ITERS }
    }
}

impl Denoiser for TvDenoiser {
    fn denoise(&self, v: &[f64], (rows, cols): (usize, usize), sigma: f64) -> Vec<f64> {
        tv_denoise(v, rows, cols, self.weight_per_sigma * sigma, self.inner_iters)
    }
}

/// Separable Gaussian blur whose width grows with the noise level,
/// `clamp(width_per_sigma * sigma, 0, max_width)` pixels, with mirrored
/// borders.
#[derive(Clone, Debug)]
pub struct GaussianDenoiser {
    pub width_per_sigma: f64,
    pub max_width: f64,
}

impl Default for GaussianDenoiser {
    fn default() -> Self {
        Self { width_per_sigma: 0.05, max_width: 2.0 }
    }
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

impl GaussianDenoiser {
    pub fn blur(v: &[f64], (rows, cols): (usize, usize), width: f64) -> Vec<f64> {
        if width < 1e-3 {
            return v.to_vec();
        }
        let radius = (3.0 * width).ceil() as isize;
        let taps: Vec<f64> = (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * width * width)).exp()).collect();
        let norm: f64 = taps.iter().sum();
        let taps: Vec<f64> = taps.into_iter().map(|t| t / norm).collect();
        let mut down = vec![0.0; v.len()];
        for c in 0..cols {
            for r in 0..rows {
                down[c * rows + r] = taps
                    .iter()
                    .enumerate()
                    .map(|(t, &w)| w * v[c * rows + mirror(r as isize + t as isize - radius, rows)])
                    .sum();
            }
        }
        let mut out = vec![0.0; v.len()];
        for c in 0..cols {
            for r in 0..rows {
                out[c * rows + r] = taps
                    .iter()
                    .enumerate()
                    .map(|(t, &w)| w * down[mirror(c as isize + t as isize - radius, cols) * rows + r])
                    .sum();
            }
        }
        out
    }
}

impl Denoiser for GaussianDenoiser {
    fn denoise(&self, v: &[f64], grid: (usize, usize), sigma: f64) -> Vec<f64> {
        Self::blur(v, grid, (self.width_per_sigma * sigma).clamp(0.0, self.max_width))
    }
}

/// One-probe Monte-Carlo divergence `eta^T (D(v + e eta) - D(v)) / e` with
/// `e = eps * max(1, max|v|)` and standard normal `eta`.
pub fn mc_divergence(
    d: &dyn Denoiser,
    v: &[f64],
    dv: &[f64],
    grid: (usize, usize),
    sigma: f64,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let e = eps * scale;
    let eta: Vec<f64> = (0..v.len()).map(|_| StandardNormal.sample(rng)).collect();
    let shifted: Vec<f64> = v.iter().zip(&eta).map(|(a, n)| a + e * n).collect();
    let out = d.denoise(&shifted, grid, sigma);
    eta.iter().zip(out.iter().zip(dv)).map(|(n, (a, b))| n * (a - b)).sum::<f64>() / e
}

#[derive(Clone, Debug)]
pub struct DampState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub sigma_hat: f64,
    pub iterations: usize,
    /// `|y - Phi x^t|` after each iteration.
    pub residual_norms: Vec<f64>,
    pub divergences: Vec<f64>,
}

/// D-AMP from `x = 0`, `z = y`:
/// `x' = D(x + Phi^T z)`, `z' = y - Phi x' + z div/M`, `sigma^2 = |z|^2/M`.
pub fn damp_signal(
    y: &[f64],
    op: &dyn LinearOperator,
    cfg: &ReconConfig,
    denoiser: &dyn Denoiser,
) -> Result<DampState, ReconError> {
    cfg.validate()?;
    let grid = op.grid();
    let m = op.measurements() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut x = vec![0.0; op.signal_len()];
    let mut z = y.to_vec();
    let mut sigma_hat = norm(&z) / m.sqrt();
    let mut residual_norms = Vec::new();
    let mut divergences = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let back = op.apply_transpose(&z)?;
        let v: Vec<f64> = x.iter().zip(&back).map(|(a, b)| a + b).collect();
        let next = denoiser.denoise(&v, grid, sigma_hat);
        let div = mc_divergence(denoiser, &v, &next, grid, sigma_hat, cfg.mc_probe_eps, &mut rng);
        if !div.is_finite() {
            return Err(ReconError::Numerical(format!("divergence estimate {div} at iteration {iterations}")));
        }
        divergences.push(div);
        let phi_x = op.apply(&next)?;
        let onsager = div / m;
        let residual: Vec<f64> = y.iter().zip(&phi_x).map(|(a, b)| a - b).collect();
        residual_norms.push(norm(&residual));
        z = residual.iter().zip(&z).map(|(r, old)| r + old * onsager).collect();
        sigma_hat = norm(&z) / m.sqrt();
        if !sigma_hat.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(ReconError::Numerical(format!("D-AMP diverged at iteration {iterations}")));
        }
        let change = relative_change(&next, &x);
        x = next;
        if change < cfg.tol {
            break;
        }
    }
    Ok(DampState { x, z, sigma_hat, iterations, residual_norms, divergences })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn damp(y: &[f64], op: &dyn LinearOperator, cfg: &ReconConfig) -> Result<ImagePlane, ReconError> {
    let state = match cfg.denoiser {
        DenoiserKind::Tv => {
            damp_signal(y, op, cfg, &TvDenoiser { inner_iters: cfg.tv_inner_iters, ..TvDenoiser::default() })?
        }
        DenoiserKind::Gaussian => damp_signal(y, op, cfg, &GaussianDenoiser::default())?,
    };
    Ok(to_image(&state.x, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{MatrixKind, SensingOperator};

    #[test]
    fn identity_divergence_is_signal_length() {
        let v: Vec<f64> = (0..4096).map(|i| (i % 97) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let div = mc_divergence(&IdentityDenoiser, &v, &v, (64, 64), 1.0, 1e-3, &mut rng);
        assert!((div / 4096.0 - 1.0).abs() < 0.05, "{div}");
    }

    #[test]
    fn blur_preserves_constants_and_mean_direction() {
        let v = vec![7.0; 35];
        let out = GaussianDenoiser::blur(&v, (5, 7), 1.3);
        assert!(out.iter().all(|x| (x - 7.0).abs() < 1e-12));
        assert_eq!(mirror(-1, 5), 0);
        assert_eq!(mirror(5, 5), 4);
        assert_eq!(mirror(-7, 5), 3);
    }

    #[test]
    fn constant_image_within_one_level() {
        let img = ImagePlane::filled(16, 16, 90).unwrap();
        let op = SensingOperator::new(MatrixKind::Dct2d, 16, 16, 40, 0).unwrap();
        let y = op.measure(&img).unwrap().into_values();
        let out = damp(&y, &op, &ReconConfig::damp()).unwrap();
        assert!(out.pixels().iter().all(|&p| (i32::from(p) - 90).abs() <= 1));
    }
}
