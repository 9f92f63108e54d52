//! Compressive-sensing image codec.
//!
//! The encoder projects a grayscale image onto a small number of transform
//! domain measurements ([`sensing`]), quantizes them with a mid-tread uniform
//! quantizer ([`quantizer`]), and packs the codewords into a self-contained
//! byte stream using sectioned static arithmetic coding ([`entropy`],
//! [`bitstream`]). The decoder parses the stream and reconstructs the image
//! iteratively with GAP-TV or D-AMP ([`recon`]).
//!
//! [`codec`] wires the stages together, [`metrics`] provides SSIM/PSNR and
//! [`harness`] runs quality-versus-size sweeps over an image corpus.
//!
//! Data-parallel inner loops (separable transforms, TV denoising, corpus
//! sweeps) run on rayon when the `parallel` feature is enabled (the default).
//! Every parallel loop writes disjoint outputs and every reduction runs in a
//! fixed order, so results are bit-identical with or without the feature.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitstream;
pub mod codec;
pub mod entropy;
mod error;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod parallel;
pub mod quantizer;
pub mod recon;
pub mod sensing;

pub use codec::{decode, encode, DecoderConfig, Encoded, EncoderConfig};
pub use error::{Error, Result};
pub use image::ImagePlane;
pub use sensing::{MatrixKind, SensingOperator};
