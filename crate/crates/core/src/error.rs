use thiserror::Error;

use crate::bitstream::FormatError;
use crate::entropy::EntropyError;
use crate::image::ImageError;
use crate::quantizer::QuantizerError;
use crate::recon::ReconError;
use crate::sensing::SensingError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: stream parse errors keep their own codes, input
    /// and usage problems map to 2 and numerical failures to 9.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(f) => f.exit_code(),
            Error::Image(_) | Error::Io(_) | Error::Config(_) => 2,
            Error::Entropy(_) => 8,
            Error::Sensing(_) | Error::Quantizer(_) | Error::Recon(_) => 9,
        }
    }
}
