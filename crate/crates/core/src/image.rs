//! 8-bit grayscale image planes and binary PGM (P5) I/O.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image must have at least one pixel")]
    Empty,
    #[error("pixel buffer holds {got} values, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("image sizes differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("not a binary PGM: {0}")]
    Pgm(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Grayscale image, row-major storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl ImagePlane {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::Empty);
        }
        if pixels.len() != height * width {
            return Err(ImageError::BufferSize { expected: height * width, got: pixels.len() });
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Column-by-column pixel vector embedded in a `grid_rows x grid_cols`
    /// zero-padded canvas (the image sits in the top-left corner).
    pub fn to_column_major(&self, grid_rows: usize, grid_cols: usize) -> Vec<f64> {
        debug_assert!(grid_rows >= self.height && grid_cols >= self.width);
        let mut out = vec![0.0; grid_rows * grid_cols];
        for c in 0..self.width {
            let col = &mut out[c * grid_rows..c * grid_rows + self.height];
            for (r, v) in col.iter_mut().enumerate() {
                *v = f64::from(self.pixels[r * self.width + c]);
            }
        }
        out
    }

    /// Inverse of [`to_column_major`](Self::to_column_major): crops the canvas,
    /// rounds, and clips every value to `[0, 255]`.
    pub fn from_column_major(data: &[f64], grid_rows: usize, height: usize, width: usize) -> Result<Self, ImageError> {
        if grid_rows < height || data.len() < grid_rows * width {
            return Err(ImageError::BufferSize { expected: grid_rows * width, got: data.len() });
        }
        Self::from_fn(height, width, |r, c| {
            let v = data[c * grid_rows + r];
            if v.is_nan() {
                0
            } else {
                v.round().clamp(0.0, 255.0) as u8
            }
        })
    }

    pub fn read_pgm(mut reader: impl Read) -> Result<Self, ImageError> {
        let mut buf = Vec::new();
        reader.read_to_end(&mut buf)?;
        Self::parse_pgm(&buf)
    }

    pub fn parse_pgm(buf: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0usize;
        let magic = next_token(buf, &mut pos)?;
        if magic != b"P5" {
            return Err(ImageError::Pgm("magic is not P5".into()));
        }
        let width = parse_number(next_token(buf, &mut pos)?)?;
        let height = parse_number(next_token(buf, &mut pos)?)?;
        let maxval = parse_number(next_token(buf, &mut pos)?)?;
        if maxval != 255 {
            return Err(ImageError::Pgm(format!("unsupported maxval {maxval}, expected 255")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let n = width.checked_mul(height).ok_or_else(|| ImageError::Pgm("dimensions overflow".into()))?;
        let raster =
            buf.get(pos..pos + n).ok_or_else(|| ImageError::Pgm(format!("raster truncated: need {n} bytes")))?;
        Self::new(height, width, raster.to_vec())
    }

    pub fn write_pgm(&self, mut writer: impl Write) -> Result<(), ImageError> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let bytes = std::fs::read(path)?;
        Self::parse_pgm(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut out = Vec::with_capacity(self.len() + 32);
        self.write_pgm(&mut out)?;
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn next_token<'a>(buf: &'a [u8], pos: &mut usize) -> Result<&'a [u8], ImageError> {
    loop {
        match buf.get(*pos) {
            Some(b'#') => {
                while let Some(&b) = buf.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(ImageError::Pgm("header truncated".into())),
        }
    }
    let start = *pos;
    while buf.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&buf[start..*pos])
}

fn parse_number(token: &[u8]) -> Result<usize, ImageError> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImageError::Pgm(format!("bad header field {:?}", String::from_utf8_lossy(token))))
}
