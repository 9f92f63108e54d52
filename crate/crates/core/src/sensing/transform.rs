//! Orthonormal fast transforms: DCT-II (FFT based) and sequency-ordered
//! Walsh-Hadamard, in 1D and separable 2D form.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SensingError;
use crate::parallel;

/// Reusable per-worker buffers for the 1D transforms.
#[derive(Default)]
pub struct Scratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
    real: Vec<f64>,
}

/// Orthonormal DCT-II of a fixed length, computed with one complex FFT of the
/// same length (even/odd reordering).
#[derive(Clone)]
pub struct Dct {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / 2n)`
    twiddle: Vec<Complex64>,
    scale_dc: f64,
    scale_ac: f64,
}

impl Dct {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DCT length must be positive");
        let mut planner = FftPlanner::new();
        let n = len as f64;
        let twiddle =
            (0..len).map(|k| Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n))).collect();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            twiddle,
            scale_dc: (1.0 / n).sqrt(),
            scale_ac: (2.0 / n).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, data: &mut [f64], scratch: &mut Scratch) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        let buf = &mut scratch.buf;
        buf.clear();
        buf.resize(n, Complex64::default());
        let half = n.div_ceil(2);
        for k in 0..half {
            buf[k] = Complex64::new(data[2 * k], 0.0);
        }
        for k in 0..n / 2 {
            buf[n - 1 - k] = Complex64::new(data[2 * k + 1], 0.0);
        }
        scratch.fft.resize(self.forward.get_inplace_scratch_len(), Complex64::default());
        self.forward.process_with_scratch(buf, &mut scratch.fft);
        for k in 0..n {
            let scale = if k == 0 { self.scale_dc } else { self.scale_ac };
            data[k] = (self.twiddle[k] * buf[k]).re * scale;
        }
    }

    pub fn inverse(&self, data: &mut [f64], scratch: &mut Scratch) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        let buf = &mut scratch.buf;
        buf.clear();
        buf.resize(n, Complex64::default());
        let unscale = |k: usize, v: f64| if k == 0 { v / self.scale_dc } else { v / self.scale_ac };
        for k in 0..n {
            let re = unscale(k, data[k]);
            let im = if k == 0 { 0.0 } else { -unscale(n - k, data[n - k]) };
            buf[k] = self.twiddle[k].conj() * Complex64::new(re, im);
        }
        scratch.fft.resize(self.inverse.get_inplace_scratch_len(), Complex64::default());
        self.inverse.process_with_scratch(buf, &mut scratch.fft);
        let norm = 1.0 / n as f64;
        let half = n.div_ceil(2);
        for k in 0..half {
            data[2 * k] = buf[k].re * norm;
        }
        for k in 0..n / 2 {
            data[2 * k + 1] = buf[n - 1 - k].re * norm;
        }
    }
}

/// Orthonormal Walsh-Hadamard transform with rows in sequency order: row `k`
/// has exactly `k` sign changes.
#[derive(Clone)]
pub struct Wht {
    len: usize,
    /// sequency index -> natural (Hadamard) index
    order: Vec<usize>,
    scale: f64,
}

impl Wht {
    pub fn new(len: usize) -> Result<Self, SensingError> {
        if !len.is_power_of_two() {
            return Err(SensingError::NotPowerOfTwo(len));
        }
        let bits = len.trailing_zeros();
        let order = (0..len)
            .map(|k| {
                let gray = k ^ (k >> 1);
                if bits == 0 {
                    0
                } else {
                    gray.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Ok(Self { len, order, scale: 1.0 / (len as f64).sqrt() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn butterflies(data: &mut [f64]) {
        let n = data.len();
        let mut h = 1;
        while h < n {
            for block in data.chunks_mut(2 * h) {
                let (a, b) = block.split_at_mut(h);
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = u + v;
                    *y = u - v;
                }
            }
            h *= 2;
        }
    }

    pub fn forward(&self, data: &mut [f64], scratch: &mut Scratch) {
        debug_assert_eq!(data.len(), self.len);
        Self::butterflies(data);
        let tmp = &mut scratch.real;
        tmp.clear();
        tmp.extend_from_slice(data);
        for (out, &nat) in data.iter_mut().zip(&self.order) {
            *out = tmp[nat] * self.scale;
        }
    }

    pub fn inverse(&self, data: &mut [f64], scratch: &mut Scratch) {
        debug_assert_eq!(data.len(), self.len);
        let tmp = &mut scratch.real;
        tmp.clear();
        tmp.resize(self.len, 0.0);
        for (&v, &nat) in data.iter().zip(&self.order) {
            tmp[nat] = v * self.scale;
        }
        data.copy_from_slice(tmp);
        Self::butterflies(data);
    }
}

/// A 1D orthonormal transform used along one axis or over a whole vector.
#[derive(Clone)]
pub enum Transform1d {
    Dct(Dct),
    Wht(Wht),
}

impl Transform1d {
    pub fn len(&self) -> usize {
        match self {
            Self::Dct(t) => t.len(),
            Self::Wht(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [f64], scratch: &mut Scratch) {
        match self {
            Self::Dct(t) => t.forward(data, scratch),
            Self::Wht(t) => t.forward(data, scratch),
        }
    }

    pub fn inverse(&self, data: &mut [f64], scratch: &mut Scratch) {
        match self {
            Self::Dct(t) => t.inverse(data, scratch),
            Self::Wht(t) => t.inverse(data, scratch),
        }
    }
}

/// Separable 2D transform over a column-major `rows x cols` grid.
#[derive(Clone)]
pub struct Transform2d {
    rows: usize,
    cols: usize,
    along_cols: Transform1d,
    along_rows: Transform1d,
}

impl Transform2d {
    pub fn dct(rows: usize, cols: usize) -> Self {
        Self { rows, cols, along_cols: Transform1d::Dct(Dct::new(rows)), along_rows: Transform1d::Dct(Dct::new(cols)) }
    }

    pub fn wht(rows: usize, cols: usize) -> Result<Self, SensingError> {
        Ok(Self {
            rows,
            cols,
            along_cols: Transform1d::Wht(Wht::new(rows)?),
            along_rows: Transform1d::Wht(Wht::new(cols)?),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn forward(&self, data: &mut [f64]) {
        self.separable(data, false);
    }

    pub fn inverse(&self, data: &mut [f64]) {
        self.separable(data, true);
    }

    fn separable(&self, data: &mut [f64], inverse: bool) {
        let (rows, cols) = (self.rows, self.cols);
        debug_assert_eq!(data.len(), rows * cols);
        let run = |tf: &Transform1d, chunk: &mut [f64], s: &mut Scratch| {
            if inverse {
                tf.inverse(chunk, s)
            } else {
                tf.forward(chunk, s)
            }
        };
        parallel::for_each_chunk_mut(data, rows, Scratch::default, |s, _, col| run(&self.along_cols, col, s));
        let mut by_rows = vec![0.0; rows * cols];
        transpose(data, &mut by_rows, rows, cols);
        parallel::for_each_chunk_mut(&mut by_rows, cols, Scratch::default, |s, _, row| run(&self.along_rows, row, s));
        transpose(&by_rows, data, cols, rows);
    }
}

/// `src` is column-major `rows x cols`; writes its transpose (column-major
/// `cols x rows`) into `dst`.
fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    const TILE: usize = 32;
    for c0 in (0..cols).step_by(TILE) {
        for r0 in (0..rows).step_by(TILE) {
            for c in c0..(c0 + TILE).min(cols) {
                for r in r0..(r0 + TILE).min(rows) {
                    dst[r * cols + c] = src[c * rows + r];
                }
            }
        }
    }
}

/// Orthonormal sequency-ordered Walsh-Hadamard transform of `v`.
pub fn fwht_sequency(v: &[f64]) -> Result<Vec<f64>, SensingError> {
    let wht = Wht::new(v.len())?;
    let mut out = v.to_vec();
    wht.forward(&mut out, &mut Scratch::default());
    Ok(out)
}

/// Orthonormal 2D DCT-II of a column-major `rows x cols` matrix.
pub fn dct2_orthonormal(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>, SensingError> {
    check_matrix(data, rows, cols)?;
    let mut out = data.to_vec();
    Transform2d::dct(rows, cols).forward(&mut out);
    Ok(out)
}

/// Inverse of [`dct2_orthonormal`].
pub fn idct2_orthonormal(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>, SensingError> {
    check_matrix(data, rows, cols)?;
    let mut out = data.to_vec();
    Transform2d::dct(rows, cols).inverse(&mut out);
    Ok(out)
}

fn check_matrix(data: &[f64], rows: usize, cols: usize) -> Result<(), SensingError> {
    if rows == 0 || cols == 0 {
        return Err(SensingError::EmptyInput);
    }
    if data.len() != rows * cols {
        return Err(SensingError::DimensionMismatch { expected: rows * cols, got: data.len() });
    }
    Ok(())
}
