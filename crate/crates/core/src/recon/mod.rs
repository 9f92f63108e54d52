//! Iterative reconstruction from dequantized measurements.

mod damp;
pub mod tv;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::ImagePlane;
use crate::sensing::{LinearOperator, SensingError};

pub use damp::{damp, damp_signal, mc_divergence, DampState, Denoiser, GaussianDenoiser, IdentityDenoiser, TvDenoiser};
pub use tv::{tv_denoise, tv_denoise_traced, tv_norm, TvOutcome, DEFAULT_INNER_ITERS};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid reconstruction settings: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    GapTv,
    Damp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GapTv => "gaptv",
            Algorithm::Damp => "damp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ReconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gaptv" | "gap" => Ok(Algorithm::GapTv),
            "damp" => Ok(Algorithm::Damp),
            _ => Err(ReconError::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DenoiserKind {
    Tv,
    Gaussian,
}

impl FromStr for DenoiserKind {
    type Err = ReconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(DenoiserKind::Tv),
            "gaussian" | "gauss" => Ok(DenoiserKind::Gaussian),
            _ => Err(ReconError::Config(format!("unknown denoiser {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconConfig {
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// GAP-TV denoising weight, in gray levels.
    pub tv_weight: f64,
    /// Stop when `|x_new - x| / |x|` drops below this.
    pub tol: f64,
    pub tv_inner_iters: usize,
    pub denoiser: DenoiserKind,
    /// Relative size of the divergence probe step.
    pub mc_probe_eps: f64,
    pub rng_seed: u64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::GapTv,
            max_iters: 100,
            tv_weight: 0.07 * 255.0,
            tol: 1e-4,
            tv_inner_iters: DEFAULT_INNER_ITERS,
            denoiser: DenoiserKind::Tv,
            mc_probe_eps: 1e-3,
            rng_seed: 0,
        }
    }
}

impl ReconConfig {
    pub fn damp() -> Self {
        Self { algorithm: Algorithm::Damp, max_iters: 30, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ReconError> {
        if self.max_iters == 0 {
            return Err(ReconError::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ReconError::Config("tol must be positive".into()));
        }
        if !(self.tv_weight > 0.0) || !(self.mc_probe_eps > 0.0) {
            return Err(ReconError::Config("weights must be positive".into()));
        }
        Ok(())
    }
}

/// `theta + Phi^T (y - Phi theta)`: the closest point to `theta` on
/// `{x : Phi x = y}` for an operator with orthonormal rows.
pub fn project_consistent(theta: &[f64], op: &dyn LinearOperator, y: &[f64]) -> Result<Vec<f64>, ReconError> {
    let phi_theta = op.apply(theta)?;
    if y.len() != phi_theta.len() {
        return Err(SensingError::DimensionMismatch { expected: phi_theta.len(), got: y.len() }.into());
    }
    let r: Vec<f64> = y.iter().zip(&phi_theta).map(|(a, b)| a - b).collect();
    let back = op.apply_transpose(&r)?;
    Ok(theta.iter().zip(&back).map(|(a, b)| a + b).collect())
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let num: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = old.iter().map(|a| a * a).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

pub(crate) fn to_image(x: &[f64], op: &dyn LinearOperator) -> ImagePlane {
    let (rows, _) = op.grid();
    let (h, w) = op.image_dims();
    ImagePlane::from_column_major(x, rows, h, w).expect("canvas holds the image")
}

/// Iterates of a GAP-TV run.
#[derive(Clone, Debug)]
pub struct GapTvState {
    /// Final denoised estimate on the canvas.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `TV(theta)` of the denoised iterate, per iteration.
    pub tv_trace: Vec<f64>,
    /// `TV` of the denoiser input, per iteration.
    pub input_tv_trace: Vec<f64>,
}

/// GAP-TV with measurement feedback. Starting from `x = Phi^T y`:
/// `theta = TV_denoise(x)`, `y_k += y - Phi theta`, `x = theta + Phi^T (y_k - Phi theta)`.
/// The returned estimate is the last `theta`.
pub fn gap_tv_signal(y: &[f64], op: &dyn LinearOperator, cfg: &ReconConfig) -> Result<GapTvState, ReconError> {
    cfg.validate()?;
    let (rows, cols) = op.grid();
    let mut x = op.apply_transpose(y)?;
    let mut y_k = y.to_vec();
    let mut theta = x.clone();
    let mut tv_trace = Vec::new();
    let mut input_tv_trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let next = tv_denoise(&x, rows, cols, cfg.tv_weight, cfg.tv_inner_iters);
        input_tv_trace.push(tv_norm(&x, rows, cols));
        tv_trace.push(tv_norm(&next, rows, cols));
        let phi_theta = op.apply(&next)?;
        for (acc, (&target, &got)) in y_k.iter_mut().zip(y.iter().zip(&phi_theta)) {
            *acc += target - got;
        }
        let r: Vec<f64> = y_k.iter().zip(&phi_theta).map(|(a, b)| a - b).collect();
        let back = op.apply_transpose(&r)?;
        x = next.iter().zip(&back).map(|(a, b)| a + b).collect();
        let change = relative_change(&next, &theta);
        theta = next;
        if !change.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(ReconError::Numerical("GAP-TV iterate is not finite".into()));
        }
        if change < cfg.tol {
            break;
        }
    }
    Ok(GapTvState { x: theta, iterations, tv_trace, input_tv_trace })
}

pub fn gap_tv(y: &[f64], op: &dyn LinearOperator, cfg: &ReconConfig) -> Result<ImagePlane, ReconError> {
    Ok(to_image(&gap_tv_signal(y, op, cfg)?.x, op))
}

/// Runs the configured algorithm.
pub fn reconstruct(y: &[f64], op: &dyn LinearOperator, cfg: &ReconConfig) -> Result<ImagePlane, ReconError> {
    match cfg.algorithm {
        Algorithm::GapTv => gap_tv(y, op, cfg),
        Algorithm::Damp => damp(y, op, cfg),
    }
}

/// An operator whose masked rows read and write zero (`D Phi` with a 0/1
/// diagonal `D`).
pub struct MaskedOperator<'a> {
    inner: &'a dyn LinearOperator,
    mask: Vec<bool>,
}

impl MaskedOperator<'_> {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Wraps `op` so the rows flagged in `mask` are zero. An empty mask leaves
/// every row in place.
pub fn zero_saturated_rows<'a>(op: &'a dyn LinearOperator, mask: &[bool]) -> Result<MaskedOperator<'a>, ReconError> {
    let mask = if mask.is_empty() { vec![false; op.measurements()] } else { mask.to_vec() };
    if mask.len() != op.measurements() {
        return Err(SensingError::DimensionMismatch { expected: op.measurements(), got: mask.len() }.into());
    }
    Ok(MaskedOperator { inner: op, mask })
}

impl LinearOperator for MaskedOperator<'_> {
    fn measurements(&self) -> usize {
        self.inner.measurements()
    }

    fn signal_len(&self) -> usize {
        self.inner.signal_len()
    }

    fn grid(&self) -> (usize, usize) {
        self.inner.grid()
    }

    fn image_dims(&self) -> (usize, usize) {
        self.inner.image_dims()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SensingError> {
        let mut y = self.inner.apply(x)?;
        for (v, &m) in y.iter_mut().zip(&self.mask) {
            if m {
                *v = 0.0;
            }
        }
        Ok(y)
    }

    fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>, SensingError> {
        if z.len() != self.mask.len() {
            return Err(SensingError::DimensionMismatch { expected: self.mask.len(), got: z.len() });
        }
        let masked: Vec<f64> = z.iter().zip(&self.mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
        self.inner.apply_transpose(&masked)
    }
}
