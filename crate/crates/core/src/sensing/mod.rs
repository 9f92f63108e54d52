//! Sensing operators: the measurement matrix `Phi`, applied through fast
//! transforms and never stored.
//!
//! Signals are column-major pixel vectors. Walsh-Hadamard based kinds work on
//! a zero-padded canvas whose sides are the next powers of two, so their
//! signal length is the padded pixel count; the decoder crops afterwards.
//!
//! All transforms are orthonormal and every operator selects (and, for ROT,
//! orthonormally mixes) rows of an orthonormal matrix, so `Phi Phi^T = I` and
//! every row has unit norm.

mod rng;
mod transform;
mod zigzag;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::ImagePlane;
pub use rng::{SeededRng, Stream};
pub use transform::{dct2_orthonormal, fwht_sequency, idct2_orthonormal, Dct, Scratch, Transform1d, Transform2d, Wht};
pub use zigzag::zigzag_indices;

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("measurement count {m} outside 1..={max}")]
    MeasurementCount { m: usize, max: usize },
    #[error("compression ratio {0} outside (0, 1]")]
    Ratio(f64),
    #[error("unknown sensing matrix code {0}")]
    UnknownKind(u8),
    #[error("unknown sensing matrix name {0:?}")]
    UnknownName(String),
}

/// Sensing matrix families. The discriminant is the bitstream code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MatrixKind {
    Dct2d = 0,
    Wht2d = 1,
    SrmDct = 2,
    SrmWht = 3,
    RotDct2d = 4,
    RotWht2d = 5,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 6] = [
        MatrixKind::Dct2d,
        MatrixKind::Wht2d,
        MatrixKind::SrmDct,
        MatrixKind::SrmWht,
        MatrixKind::RotDct2d,
        MatrixKind::RotWht2d,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, SensingError> {
        Self::ALL.get(code as usize).copied().ok_or(SensingError::UnknownKind(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dct2d => "dct2d",
            Self::Wht2d => "wht2d",
            Self::SrmDct => "srm-dct",
            Self::SrmWht => "srm-wht",
            Self::RotDct2d => "rot-dct2d",
            Self::RotWht2d => "rot-wht2d",
        }
    }

    pub fn uses_wht(self) -> bool {
        matches!(self, Self::Wht2d | Self::SrmWht | Self::RotWht2d)
    }

    pub fn is_seeded(self) -> bool {
        matches!(self, Self::SrmDct | Self::SrmWht | Self::RotDct2d | Self::RotWht2d)
    }

    /// The deterministic kind a ROT kind mixes, if any.
    pub fn rot_base(self) -> Option<Self> {
        match self {
            Self::RotDct2d => Some(Self::Dct2d),
            Self::RotWht2d => Some(Self::Wht2d),
            _ => None,
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixKind {
    type Err = SensingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('-', "") == norm)
            .ok_or_else(|| SensingError::UnknownName(s.to_string()))
    }
}

/// Measurements `y = Phi x`, DC first, with AC statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
    ac_mean: f64,
    ac_std: f64,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Self {
        let ac = values.get(1..).unwrap_or(&[]);
        let (ac_mean, ac_std) = if ac.is_empty() {
            (0.0, 0.0)
        } else {
            let n = ac.len() as f64;
            let mean = ac.iter().sum::<f64>() / n;
            let var = ac.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        Self { values, ac_mean, ac_std }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dc(&self) -> f64 {
        self.values[0]
    }

    /// Mean of the measurements excluding the DC entry.
    pub fn ac_mean(&self) -> f64 {
        self.ac_mean
    }

    /// Population standard deviation excluding the DC entry.
    pub fn ac_std(&self) -> f64 {
        self.ac_std
    }
}

/// A linear map from signals to measurements with an explicit adjoint.
pub trait LinearOperator: Sync {
    fn measurements(&self) -> usize;

    fn signal_len(&self) -> usize;

    /// Column-major canvas the signal lives on, `(rows, cols)`.
    fn grid(&self) -> (usize, usize);

    /// Image size inside the top-left corner of the canvas.
    fn image_dims(&self) -> (usize, usize) {
        self.grid()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SensingError>;

    fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>, SensingError>;
}

#[derive(Clone)]
enum Base {
    /// 2D transform, zig-zag, keep the first M.
    Deterministic { transform: Transform2d, selected: Vec<usize> },
    /// Permute, 1D transform, keep DC plus M-1 random coefficients.
    Structured { transform: Transform1d, permutation: Vec<usize>, selected: Vec<usize> },
}

/// Random orthonormal mixing `S H R` of the AC measurements.
#[derive(Clone)]
struct Mixer {
    signs: Vec<f64>,
    dct: Dct,
    /// output `i` takes entry `order[i]` of `H R w`
    order: Vec<usize>,
}

impl Mixer {
    fn forward(&self, w: &mut [f64]) {
        let mut t: Vec<f64> = w.iter().zip(&self.signs).map(|(a, s)| a * s).collect();
        self.dct.forward(&mut t, &mut Scratch::default());
        for (out, &src) in w.iter_mut().zip(&self.order) {
            *out = t[src];
        }
    }

    fn transpose(&self, w: &mut [f64]) {
        let mut t = vec![0.0; w.len()];
        for (&v, &dst) in w.iter().zip(&self.order) {
            t[dst] = v;
        }
        self.dct.inverse(&mut t, &mut Scratch::default());
        for ((out, v), s) in w.iter_mut().zip(t).zip(&self.signs) {
            *out = v * s;
        }
    }
}

/// Functional description of a sensing matrix. Immutable after construction.
#[derive(Clone)]
pub struct SensingOperator {
    kind: MatrixKind,
    n_v: usize,
    n_h: usize,
    grid_v: usize,
    grid_h: usize,
    m: usize,
    seed: u64,
    base: Base,
    mixer: Option<Mixer>,
}

impl fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingOperator")
            .field("kind", &self.kind)
            .field("n_v", &self.n_v)
            .field("n_h", &self.n_h)
            .field("grid", &(self.grid_v, self.grid_h))
            .field("m", &self.m)
            .field("seed", &self.seed)
            .finish()
    }
}

impl SensingOperator {
    /// Canvas dimensions used by `kind` for an `n_v x n_h` image.
    pub fn grid_for(kind: MatrixKind, n_v: usize, n_h: usize) -> (usize, usize) {
        if kind.uses_wht() {
            (n_v.next_power_of_two(), n_h.next_power_of_two())
        } else {
            (n_v, n_h)
        }
    }

    /// Measurement count for a compression ratio: `floor(csr * N)` AC
    /// measurements plus the DC one, capped at the canvas size.
    pub fn measurements_for_ratio(kind: MatrixKind, n_v: usize, n_h: usize, csr: f64) -> Result<usize, SensingError> {
        if !(csr > 0.0 && csr <= 1.0) {
            return Err(SensingError::Ratio(csr));
        }
        let (gv, gh) = Self::grid_for(kind, n_v, n_h);
        let n = (n_v * n_h) as f64;
        Ok(((csr * n).floor() as usize + 1).min(gv * gh))
    }

    pub fn new(kind: MatrixKind, n_v: usize, n_h: usize, m: usize, seed: u64) -> Result<Self, SensingError> {
        if n_v == 0 || n_h == 0 {
            return Err(SensingError::EmptyInput);
        }
        let (grid_v, grid_h) = Self::grid_for(kind, n_v, n_h);
        let n = grid_v * grid_h;
        if m == 0 || m > n {
            return Err(SensingError::MeasurementCount { m, max: n });
        }
        let seed = if kind.is_seeded() { seed } else { 0 };
        let deterministic = |wht: bool| -> Result<Base, SensingError> {
            let transform = if wht { Transform2d::wht(grid_v, grid_h)? } else { Transform2d::dct(grid_v, grid_h) };
            let selected = zigzag_indices(grid_v, grid_h).into_iter().take(m).map(|(r, c)| c * grid_v + r).collect();
            Ok(Base::Deterministic { transform, selected })
        };
        let structured = |wht: bool| -> Result<Base, SensingError> {
            let transform = if wht { Transform1d::Wht(Wht::new(n)?) } else { Transform1d::Dct(Dct::new(n)) };
            let permutation = SeededRng::new(seed, Stream::Permutation).permutation(n);
            let mut selected = Vec::with_capacity(m);
            selected.push(0);
            selected.extend(SeededRng::new(seed, Stream::Selection).choose((1..n).collect(), m - 1));
            Ok(Base::Structured { transform, permutation, selected })
        };
        let base = match kind {
            MatrixKind::Dct2d | MatrixKind::RotDct2d => deterministic(false)?,
            MatrixKind::Wht2d | MatrixKind::RotWht2d => deterministic(true)?,
            MatrixKind::SrmDct => structured(false)?,
            MatrixKind::SrmWht => structured(true)?,
        };
        let mixer = (kind.rot_base().is_some() && m > 1).then(|| {
            let mut signs_rng = SeededRng::new(seed, Stream::Signs);
            Mixer {
                signs: (0..m - 1).map(|_| signs_rng.sign()).collect(),
                dct: Dct::new(m - 1),
                order: SeededRng::new(seed, Stream::Mixing).permutation(m - 1),
            }
        });
        Ok(Self { kind, n_v, n_h, grid_v, grid_h, m, seed, base, mixer })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.n_v, self.n_h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Common l2 norm of the rows of `Phi`.
    pub fn row_norm(&self) -> f64 {
        1.0
    }

    /// Canvas indices (column-major) of the transform coefficients that become
    /// measurements, in measurement order (before any ROT mixing).
    pub fn selected_coefficients(&self) -> &[usize] {
        match &self.base {
            Base::Deterministic { selected, .. } | Base::Structured { selected, .. } => selected,
        }
    }

    /// SRM input permutation: entry `i` of the permuted vector is `x[p[i]]`.
    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.base {
            Base::Structured { permutation, .. } => Some(permutation),
            Base::Deterministic { .. } => None,
        }
    }

    /// ROT sign diagonal and output selection order, if this is a ROT kind.
    pub fn mixing(&self) -> Option<(&[f64], &[usize])> {
        self.mixer.as_ref().map(|m| (m.signs.as_slice(), m.order.as_slice()))
    }

    /// Measures an image (zero padded to the canvas when needed).
    pub fn measure(&self, image: &ImagePlane) -> Result<MeasurementVector, SensingError> {
        if (image.height(), image.width()) != (self.n_v, self.n_h) {
            return Err(SensingError::DimensionMismatch { expected: self.n_v * self.n_h, got: image.len() });
        }
        let x = image.to_column_major(self.grid_v, self.grid_h);
        Ok(MeasurementVector::new(self.apply(&x)?))
    }

    /// Fraction of the signal's AC energy (everything but the DC measurement)
    /// captured by the measurements.
    pub fn ac_energy_fraction(&self, x: &[f64]) -> Result<f64, SensingError> {
        let y = self.apply(x)?;
        let total: f64 = x.iter().map(|v| v * v).sum::<f64>() - y[0] * y[0];
        let captured: f64 = y[1..].iter().map(|v| v * v).sum();
        Ok(if total > 0.0 { captured / total } else { 0.0 })
    }

    fn check_len(expected: usize, got: usize) -> Result<(), SensingError> {
        if expected == got {
            Ok(())
        } else {
            Err(SensingError::DimensionMismatch { expected, got })
        }
    }
}

impl LinearOperator for SensingOperator {
    fn measurements(&self) -> usize {
        self.m
    }

    fn signal_len(&self) -> usize {
        self.grid_v * self.grid_h
    }

    fn grid(&self) -> (usize, usize) {
        (self.grid_v, self.grid_h)
    }

    fn image_dims(&self) -> (usize, usize) {
        (self.n_v, self.n_h)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SensingError> {
        Self::check_len(self.signal_len(), x.len())?;
        let mut y = match &self.base {
            Base::Deterministic { transform, selected } => {
                let mut buf = x.to_vec();
                transform.forward(&mut buf);
                selected.iter().map(|&i| buf[i]).collect::<Vec<_>>()
            }
            Base::Structured { transform, permutation, selected } => {
                let mut buf: Vec<f64> = permutation.iter().map(|&p| x[p]).collect();
                transform.forward(&mut buf, &mut Scratch::default());
                selected.iter().map(|&i| buf[i]).collect()
            }
        };
        if let Some(mixer) = &self.mixer {
            mixer.forward(&mut y[1..]);
        }
        Ok(y)
    }

    fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>, SensingError> {
        Self::check_len(self.m, z.len())?;
        let mut w = z.to_vec();
        if let Some(mixer) = &self.mixer {
            mixer.transpose(&mut w[1..]);
        }
        let n = self.signal_len();
        Ok(match &self.base {
            Base::Deterministic { transform, selected } => {
                let mut buf = vec![0.0; n];
                for (&i, &v) in selected.iter().zip(&w) {
                    buf[i] = v;
                }
                transform.inverse(&mut buf);
                buf
            }
            Base::Structured { transform, permutation, selected } => {
                let mut buf = vec![0.0; n];
                for (&i, &v) in selected.iter().zip(&w) {
                    buf[i] = v;
                }
                transform.inverse(&mut buf, &mut Scratch::default());
                let mut x = vec![0.0; n];
                for (&p, &v) in permutation.iter().zip(&buf) {
                    x[p] = v;
                }
                x
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn kind_codes_and_names_round_trip() {
        for k in MatrixKind::ALL {
            assert_eq!(MatrixKind::from_code(k.code()).unwrap(), k);
            assert_eq!(k.name().parse::<MatrixKind>().unwrap(), k);
        }
        assert_eq!("SRM_DCT".parse::<MatrixKind>().unwrap(), MatrixKind::SrmDct);
        assert!(MatrixKind::from_code(6).is_err());
    }

    #[test]
    fn zero_image_gives_zero_measurements() {
        for kind in MatrixKind::ALL {
            let op = SensingOperator::new(kind, 8, 8, 16, 3).unwrap();
            let y = op.apply(&[0.0; 64]).unwrap();
            assert!(y.iter().all(|&v| v == 0.0));
            let x = op.apply_transpose(&[0.0; 16]).unwrap();
            assert!(x.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_image_wht_is_dc_only() {
        let img = ImagePlane::filled(8, 8, 77).unwrap();
        let op = SensingOperator::new(MatrixKind::Wht2d, 8, 8, 20, 0).unwrap();
        let y = op.measure(&img).unwrap();
        assert!((y.dc() - 77.0 * 8.0).abs() < 1e-10);
        assert!(y.values()[1..].iter().all(|v| v.abs() < 1e-10));
        assert!(y.ac_std() < 1e-10);
    }

    #[test]
    fn adjoint_identity_all_kinds() {
        for kind in MatrixKind::ALL {
            for (nv, nh, m) in [(8, 8, 16), (5, 7, 9), (16, 12, 40)] {
                let op = SensingOperator::new(kind, nv, nh, m, 11).unwrap();
                let x = random(op.signal_len(), 1);
                let z = random(m, 2);
                let lhs = dot(&op.apply(&x).unwrap(), &z);
                let rhs = dot(&x, &op.apply_transpose(&z).unwrap());
                assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{kind} {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn rows_are_orthonormal() {
        // Phi Phi^T = I: applying Phi to Phi^T z returns z
        for kind in MatrixKind::ALL {
            let op = SensingOperator::new(kind, 6, 10, 25, 5).unwrap();
            let z = random(25, 3);
            let back = op.apply(&op.apply_transpose(&z).unwrap()).unwrap();
            for (a, b) in z.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10, "{kind}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = SensingOperator::new(MatrixKind::Dct2d, 4, 4, 5, 0).unwrap();
        assert_eq!(op.apply(&[0.0; 15]), Err(SensingError::DimensionMismatch { expected: 16, got: 15 }));
        assert!(op.apply_transpose(&[0.0; 4]).is_err());
        assert!(SensingOperator::new(MatrixKind::Dct2d, 4, 4, 17, 0).is_err());
        assert!(SensingOperator::new(MatrixKind::Wht2d, 3, 3, 16, 0).is_ok());
    }

    #[test]
    fn seeded_kinds_reproduce() {
        for kind in [MatrixKind::SrmDct, MatrixKind::RotWht2d] {
            let n = SensingOperator::new(kind, 12, 12, 30, 99).unwrap().signal_len();
            let x = random(n, 9);
            let a = SensingOperator::new(kind, 12, 12, 30, 99).unwrap().apply(&x).unwrap();
            let b = SensingOperator::new(kind, 12, 12, 30, 99).unwrap().apply(&x).unwrap();
            let c = SensingOperator::new(kind, 12, 12, 30, 100).unwrap().apply(&x).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn ratio_to_measurement_count() {
        let m = SensingOperator::measurements_for_ratio(MatrixKind::Dct2d, 256, 256, 0.1).unwrap();
        assert_eq!(m, 6554);
        let full = SensingOperator::measurements_for_ratio(MatrixKind::Dct2d, 16, 16, 1.0).unwrap();
        assert_eq!(full, 256);
        assert!(SensingOperator::measurements_for_ratio(MatrixKind::Dct2d, 4, 4, 0.0).is_err());
    }

    #[test]
    fn measurement_statistics_skip_dc() {
        let y = MeasurementVector::new(vec![1000.0, 1.0, 3.0]);
        assert_eq!(y.ac_mean(), 2.0);
        assert_eq!(y.ac_std(), 1.0);
        assert_eq!(y.dc(), 1000.0);
    }

    #[test]
    fn rot_preserves_energy_of_deterministic_measurements() {
        let x = random(256, 4);
        for (rot, det) in [(MatrixKind::RotDct2d, MatrixKind::Dct2d), (MatrixKind::RotWht2d, MatrixKind::Wht2d)] {
            let a = SensingOperator::new(rot, 16, 16, 40, 8).unwrap().apply(&x).unwrap();
            let b = SensingOperator::new(det, 16, 16, 40, 0).unwrap().apply(&x).unwrap();
            let ea: f64 = a.iter().map(|v| v * v).sum();
            let eb: f64 = b.iter().map(|v| v * v).sum();
            assert!((ea.sqrt() - eb.sqrt()).abs() < 1e-9);
            assert_eq!(a[0], b[0]);
        }
    }
}
