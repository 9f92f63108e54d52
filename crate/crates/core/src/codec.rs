//! Encoder and decoder pipelines.

use crate::bitstream::{self, CodedImage, Globals, Header};
use crate::entropy::{partition_sections, DEFAULT_MERGE_WINDOW};
use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::quantizer::{
    self, choose_params, dequantize, dequantize_discarding_saturated, params_for_step, quantize, QuantizedPayload,
    QuantizerError, QuantizerParams,
};
use crate::recon::{self, zero_saturated_rows, ReconConfig};
use crate::sensing::{LinearOperator, MatrixKind, MeasurementVector, SensingOperator};

pub use crate::recon::ReconConfig as DecoderConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    pub kind: MatrixKind,
    /// Compression ratio `M / N` in `(0, 1]`.
    pub csr: f64,
    pub c_const: f64,
    /// Use this quantizer step instead of the rate-control rule.
    pub step_override: Option<f64>,
    pub seed: u64,
    pub merge_window: usize,
    pub transmit_extras: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: MatrixKind::Dct2d,
            csr: 0.1,
            c_const: quantizer::DEFAULT_C_CONST,
            step_override: None,
            seed: 0,
            merge_window: DEFAULT_MERGE_WINDOW,
            transmit_extras: true,
        }
    }
}

impl EncoderConfig {
    pub fn new(kind: MatrixKind, csr: f64) -> Self {
        Self { kind, csr, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub coded: CodedImage,
    pub payload: QuantizedPayload,
    /// Estimated section-layer size before and after each merge, in bits.
    pub partition_trace: Vec<u64>,
}

impl Encoded {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn params(&self) -> &QuantizerParams {
        &self.payload.params
    }
}

/// Sensing operator for an image under `cfg`.
pub fn operator_for(cfg: &EncoderConfig, n_v: usize, n_h: usize) -> Result<SensingOperator> {
    let m = SensingOperator::measurements_for_ratio(cfg.kind, n_v, n_h, cfg.csr)?;
    Ok(SensingOperator::new(cfg.kind, n_v, n_h, m, cfg.seed)?)
}

fn select_params(y: &MeasurementVector, cfg: &EncoderConfig, phi_norm: f64) -> Result<QuantizerParams> {
    let chosen = match cfg.step_override {
        Some(step) if !(step > 0.0 && step.is_finite()) => {
            return Err(Error::Config(format!("step override must be positive, got {step}")))
        }
        Some(step) if y.len() >= 2 => params_for_step(y, step, cfg.c_const, phi_norm),
        None if y.len() >= 2 => choose_params(y, cfg.csr, cfg.c_const, phi_norm),
        _ => Err(QuantizerError::Degenerate),
    };
    match chosen {
        Ok(p) => Ok(p),
        Err(QuantizerError::Degenerate) => {
            let step = cfg.step_override.unwrap_or((cfg.c_const * phi_norm / cfg.csr).max(phi_norm));
            let mu = if y.len() >= 2 { y.ac_mean() } else { 0.0 };
            Ok(QuantizerParams::new(mu, step, 1, cfg.c_const)?)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn encode(image: &ImagePlane, cfg: &EncoderConfig) -> Result<Encoded> {
    if !(cfg.csr > 0.0 && cfg.csr <= 1.0) {
        return Err(Error::Config(format!("compression ratio {} outside (0, 1]", cfg.csr)));
    }
    if !(cfg.c_const > 0.0 && cfg.c_const.is_finite()) {
        return Err(Error::Config(format!("rate constant {} must be positive", cfg.c_const)));
    }
    let op = operator_for(cfg, image.height(), image.width())?;
    let y = op.measure(image)?;
    let params = select_params(&y, cfg, op.row_norm())?;
    let payload = quantize(&y, &params);
    let l = params.l_max as i32;
    let merged: Vec<i32> = payload.codewords.iter().map(|&c| if c == -l { l } else { c }).collect();
    let (sections, partition_trace) = if merged.is_empty() {
        (Vec::new(), vec![0])
    } else {
        let p = partition_sections(&merged, params.l_max, cfg.merge_window)?;
        (p.sections, p.trace)
    };
    let coded = CodedImage {
        header: Header {
            n_v: image.height() as u32,
            n_h: image.width() as u32,
            bits_per_pixel: 8,
            kind: cfg.kind,
            seed: op.seed(),
            m: op.measurements() as u64,
            csr: cfg.csr,
            c_const: cfg.c_const,
        },
        globals: Globals { mu: params.mu, step: params.step, l_max: params.l_max, dc_code: payload.dc_code },
        sections,
        codewords: merged,
        extras: if cfg.transmit_extras { payload.saturated_extras.clone() } else { None },
    };
    let bytes = bitstream::write(&coded)?;
    log::debug!(
        "encoded {}x{} {} csr={} M={} step={} L={} -> {} bytes",
        image.height(),
        image.width(),
        cfg.kind,
        cfg.csr,
        op.measurements(),
        params.step,
        params.l_max,
        bytes.len()
    );
    Ok(Encoded { bytes, coded, payload, partition_trace })
}

/// Rebuilds the quantized payload a stream describes. Saturated codewords
/// take their sign from the paired extra when extras are present.
pub fn payload_of(coded: &CodedImage) -> Result<QuantizedPayload> {
    let g = &coded.globals;
    let params = QuantizerParams::new(g.mu, g.step, g.l_max, coded.header.c_const)?;
    let l = g.l_max as i32;
    let codewords = match &coded.extras {
        Some(extras) => {
            let mut e = extras.iter();
            coded
                .codewords
                .iter()
                .map(|&c| if c == l { e.next().map_or(c, |&x| if x < 0 { -l } else { l }) } else { c })
                .collect()
        }
        None => coded.codewords.clone(),
    };
    Ok(QuantizedPayload { codewords, dc_code: g.dc_code, saturated_extras: coded.extras.clone(), params })
}

pub fn operator_of(coded: &CodedImage) -> Result<SensingOperator> {
    let h = &coded.header;
    Ok(SensingOperator::new(h.kind, h.n_v as usize, h.n_h as usize, h.m as usize, h.seed)?)
}

#[derive(Clone, Debug)]
pub struct Decoded {
    pub image: ImagePlane,
    pub coded: CodedImage,
}

pub fn decode_detailed(bytes: &[u8], cfg: &DecoderConfig) -> Result<Decoded> {
    let coded = bitstream::read(bytes)?;
    let op = operator_of(&coded)?;
    let payload = payload_of(&coded)?;
    let image = if payload.saturated_extras.is_some() {
        let y = dequantize(&payload)?;
        recon::reconstruct(&y, &op, cfg)?
    } else {
        let (y, mask) = dequantize_discarding_saturated(&payload);
        let masked = zero_saturated_rows(&op, &mask)?;
        recon::reconstruct(&y, &masked, cfg)?
    };
    Ok(Decoded { image, coded })
}

pub fn decode(bytes: &[u8], cfg: &DecoderConfig) -> Result<ImagePlane> {
    Ok(decode_detailed(bytes, cfg)?.image)
}

/// Reconstruction from exact (unquantized) measurements.
pub fn reconstruct_unquantized(image: &ImagePlane, enc: &EncoderConfig, dec: &ReconConfig) -> Result<ImagePlane> {
    let op = operator_for(enc, image.height(), image.width())?;
    let y = op.measure(image)?;
    Ok(recon::reconstruct(y.values(), &op, dec)?)
}

/// Zero-filled inverse `Phi^T y` of exact measurements.
pub fn zero_fill(image: &ImagePlane, enc: &EncoderConfig) -> Result<ImagePlane> {
    let op = operator_for(enc, image.height(), image.width())?;
    let y = op.measure(image)?;
    let x = op.apply_transpose(y.values())?;
    let (rows, _) = op.grid();
    Ok(ImagePlane::from_column_major(&x, rows, image.height(), image.width())?)
}
