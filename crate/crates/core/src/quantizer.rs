//! Mid-tread uniform quantization of the measurements.
//!
//! AC measurements map to codewords in `-L..=L`; the DC measurement is coded
//! separately as its unclipped level. Saturated codewords (`|c| = L`) carry
//! their unclipped level as an extra so the decoder can still bound their
//! error by half a step.

use thiserror::Error;

use crate::sensing::MeasurementVector;

/// Rate-control constant relating compression ratio and step size.
pub const DEFAULT_C_CONST: f64 = 2.0;

/// Quantizer range in AC standard deviations.
pub const RANGE_IN_STDS: f64 = 4.0;

/// Steps above this multiple of the row norm are unusually coarse.
pub const MAX_TYPICAL_STEP_RATIO: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum QuantizerError {
    #[error("measurements have zero AC spread (constant image); use L = 1")]
    Degenerate,
    #[error("invalid quantizer input: {0}")]
    Invalid(String),
    #[error("{got} saturated extras for {expected} saturated codewords")]
    ExtrasMismatch { expected: usize, got: usize },
    #[error("saturated extra {extra} does not extend codeword {codeword}")]
    BadExtra { codeword: i32, extra: i64 },
    #[error("stream carries no saturated extras")]
    MissingExtras,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizerParams {
    /// AC measurement mean.
    pub mu: f64,
    /// Step size, in measurement units.
    pub step: f64,
    /// Clip level `L`; the codebook is `-L..=L`.
    pub l_max: u32,
    pub c_const: f64,
}

impl QuantizerParams {
    pub fn new(mu: f64, step: f64, l_max: u32, c_const: f64) -> Result<Self, QuantizerError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(QuantizerError::Invalid(format!("step must be positive, got {step}")));
        }
        if l_max == 0 {
            return Err(QuantizerError::Invalid("L must be at least 1".into()));
        }
        if !mu.is_finite() {
            return Err(QuantizerError::Invalid(format!("non-finite mean {mu}")));
        }
        Ok(Self { mu, step, l_max, c_const })
    }

    /// Number of codewords before merging `+L` and `-L`.
    pub fn codebook_size(&self) -> usize {
        2 * self.l_max as usize + 1
    }

    /// Unclipped level `floor((y - mu) / s + 0.5)`.
    pub fn level(&self, y: f64) -> i64 {
        ((y - self.mu) / self.step + 0.5).floor() as i64
    }

    pub fn reconstruct(&self, level: i64) -> f64 {
        level as f64 * self.step + self.mu
    }
}

/// Output of [`quantize`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedPayload {
    /// Clipped codewords of the AC measurements, in measurement order.
    pub codewords: Vec<i32>,
    /// Unclipped level of the DC measurement.
    pub dc_code: i64,
    /// Unclipped level of every saturated codeword, in sequence order, or
    /// `None` when they were not transmitted.
    pub saturated_extras: Option<Vec<i64>>,
    pub params: QuantizerParams,
}

impl QuantizedPayload {
    pub fn saturated_count(&self) -> usize {
        let l = self.params.l_max as i32;
        self.codewords.iter().filter(|c| c.abs() == l).count()
    }

    /// Measurement count including DC.
    pub fn measurements(&self) -> usize {
        self.codewords.len() + 1
    }

    /// Fraction of AC codewords that saturated.
    pub fn saturation_rate(&self) -> f64 {
        if self.codewords.is_empty() {
            0.0
        } else {
            self.saturated_count() as f64 / self.codewords.len() as f64
        }
    }
}

/// Step and clip level from the rate-control rule `csr * s = C * ||Phi||`.
///
/// The step is clamped below at `phi_norm`; `L` is the smallest level whose
/// range `s (L - 0.5)` covers four AC standard deviations.
pub fn choose_params(
    y: &MeasurementVector,
    csr: f64,
    c_const: f64,
    phi_norm: f64,
) -> Result<QuantizerParams, QuantizerError> {
    if !(csr > 0.0 && csr <= 1.0) {
        return Err(QuantizerError::Invalid(format!("compression ratio {csr} outside (0, 1]")));
    }
    if !(c_const > 0.0 && phi_norm > 0.0) {
        return Err(QuantizerError::Invalid("C and ||Phi|| must be positive".into()));
    }
    if y.len() < 2 {
        return Err(QuantizerError::Invalid("need at least one AC measurement".into()));
    }
    let step = (c_const * phi_norm / csr).max(phi_norm);
    params_for_step(y, step, c_const, phi_norm)
}

/// Parameters for an explicitly chosen step.
pub fn params_for_step(
    y: &MeasurementVector,
    step: f64,
    c_const: f64,
    phi_norm: f64,
) -> Result<QuantizerParams, QuantizerError> {
    if step < phi_norm {
        log::warn!("step {step} is below the row norm {phi_norm}; spending bits on digitization noise");
    } else if step > MAX_TYPICAL_STEP_RATIO * phi_norm {
        log::warn!("step {step} exceeds {MAX_TYPICAL_STEP_RATIO} x row norm");
    }
    let sigma = y.ac_std();
    if sigma == 0.0 {
        return Err(QuantizerError::Degenerate);
    }
    let l = (RANGE_IN_STDS * sigma / step + 0.5).ceil();
    if !(l >= 1.0 && l < f64::from(i32::MAX / 2)) {
        return Err(QuantizerError::Invalid(format!("clip level {l} out of range")));
    }
    QuantizerParams::new(y.ac_mean(), step, l as u32, c_const)
}

/// Quantizes the AC measurements and the DC level; extras are always produced.
pub fn quantize(y: &MeasurementVector, p: &QuantizerParams) -> QuantizedPayload {
    let l = i64::from(p.l_max);
    let mut extras = Vec::new();
    let codewords = y.values()[1..]
        .iter()
        .map(|&v| {
            let level = p.level(v);
            let c = level.clamp(-l, l);
            if c.abs() == l {
                extras.push(level);
            }
            c as i32
        })
        .collect();
    QuantizedPayload { codewords, dc_code: p.level(y.dc()), saturated_extras: Some(extras), params: *p }
}

/// Reconstructs all M measurements (DC first).
pub fn dequantize(q: &QuantizedPayload) -> Result<Vec<f64>, QuantizerError> {
    let extras = q.saturated_extras.as_ref().ok_or(QuantizerError::MissingExtras)?;
    check_extras(q, extras)?;
    let p = &q.params;
    let l = p.l_max as i32;
    let mut extras = extras.iter();
    let mut out = Vec::with_capacity(q.measurements());
    out.push(p.reconstruct(q.dc_code));
    for &c in &q.codewords {
        let level = if c.abs() == l { *extras.next().expect("checked count") } else { i64::from(c) };
        out.push(p.reconstruct(level));
    }
    Ok(out)
}

/// Fallback for streams without extras: saturated measurements are set to
/// zero and flagged in the returned mask (index 0 is DC, never masked).
pub fn dequantize_discarding_saturated(q: &QuantizedPayload) -> (Vec<f64>, Vec<bool>) {
    let p = &q.params;
    let l = p.l_max as i32;
    let mut values = Vec::with_capacity(q.measurements());
    let mut mask = Vec::with_capacity(q.measurements());
    values.push(p.reconstruct(q.dc_code));
    mask.push(false);
    for &c in &q.codewords {
        let saturated = c.abs() == l;
        values.push(if saturated { 0.0 } else { p.reconstruct(i64::from(c)) });
        mask.push(saturated);
    }
    (values, mask)
}

fn check_extras(q: &QuantizedPayload, extras: &[i64]) -> Result<(), QuantizerError> {
    let l = q.params.l_max as i32;
    let saturated: Vec<i32> = q.codewords.iter().copied().filter(|c| c.abs() == l).collect();
    if saturated.len() != extras.len() {
        return Err(QuantizerError::ExtrasMismatch { expected: saturated.len(), got: extras.len() });
    }
    for (&c, &e) in saturated.iter().zip(extras) {
        if e.signum() != i64::from(c.signum()) || e.abs() < i64::from(l) {
            return Err(QuantizerError::BadExtra { codeword: c, extra: e });
        }
    }
    Ok(())
}

/// Standard deviations of the quantization noise (`s / sqrt 12`) and of the
/// pixel digitization noise as seen in one measurement (`||phi|| / sqrt 12`).
pub fn noise_budget(p: &QuantizerParams, phi_norm: f64) -> (f64, f64) {
    let k = 12f64.sqrt();
    (p.step / k, phi_norm / k)
}
