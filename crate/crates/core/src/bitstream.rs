//! The `.csic` container. The byte layout is specified in `docs/FORMAT.md`.

use thiserror::Error;

use crate::entropy::{
    ac_decode, ac_encode, decode_histogram, encode_histogram_as, ByteSink, ByteSource, EntropyError, Hfs, Section,
};
use crate::sensing::{MatrixKind, SensingOperator};

pub const MAGIC: [u8; 4] = *b"CSIC";
pub const VERSION: u8 = 1;

const FLAG_EXTRAS: u8 = 1;
const MAX_DIMENSION: u64 = 1 << 16;
const MAX_L: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("not a csic stream (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("stream ends inside the header")]
    TruncatedHeader,
    #[error("stream is truncated")]
    Truncated,
    #[error("section histograms count {got} codewords, header implies {expected}")]
    HistogramMismatch { expected: u64, got: u64 },
    #[error("{got} saturated extras for {expected} saturated codewords")]
    ExtrasMismatch { expected: u64, got: u64 },
    #[error("corrupt stream: {0}")]
    Corrupt(String),
}

impl FormatError {
    /// Process exit status the command-line tool uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            FormatError::BadMagic => 3,
            FormatError::UnsupportedVersion(_) => 4,
            FormatError::TruncatedHeader | FormatError::Truncated => 5,
            FormatError::HistogramMismatch { .. } => 6,
            FormatError::ExtrasMismatch { .. } => 7,
            FormatError::Corrupt(_) => 8,
        }
    }

    fn body(e: EntropyError) -> Self {
        match e {
            EntropyError::Truncated => FormatError::Truncated,
            other => FormatError::Corrupt(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub n_v: u32,
    pub n_h: u32,
    pub bits_per_pixel: u32,
    pub kind: MatrixKind,
    pub seed: u64,
    /// Measurement count including DC.
    pub m: u64,
    pub csr: f64,
    pub c_const: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Globals {
    pub mu: f64,
    pub step: f64,
    pub l_max: u32,
    pub dc_code: i64,
}

/// Parsed form of a stream. `codewords` holds the `M - 1` AC codewords with
/// `-L` already merged into `L`; `extras` holds the unclipped level of each
/// `L` codeword when transmitted.
#[derive(Clone, Debug, PartialEq)]
pub struct CodedImage {
    pub header: Header,
    pub globals: Globals,
    pub sections: Vec<Section>,
    pub codewords: Vec<i32>,
    pub extras: Option<Vec<i64>>,
}

impl CodedImage {
    pub fn saturated_count(&self) -> usize {
        let l = self.globals.l_max as i32;
        self.codewords.iter().filter(|&&c| c == l).count()
    }
}

fn put_header(h: &Header, extras: bool, sink: &mut ByteSink) -> Result<(), FormatError> {
    sink.put_bytes(&MAGIC);
    sink.put_u8(VERSION);
    sink.put_unbounded_uint(u64::from(h.n_v));
    sink.put_unbounded_uint(u64::from(h.n_h));
    sink.put_unbounded_uint(u64::from(h.bits_per_pixel));
    sink.put_u8(h.kind.code());
    sink.put_u8(if extras { FLAG_EXTRAS } else { 0 });
    sink.put_unbounded_uint(h.seed);
    sink.put_unbounded_uint(h.m);
    sink.put_real(h.csr).map_err(FormatError::body)?;
    sink.put_real(h.c_const).map_err(FormatError::body)?;
    Ok(())
}

pub fn write(img: &CodedImage) -> Result<Vec<u8>, FormatError> {
    let l = img.globals.l_max;
    if img.codewords.len() as u64 + 1 != img.header.m {
        return Err(FormatError::Corrupt(format!(
            "{} codewords for {} measurements",
            img.codewords.len(),
            img.header.m
        )));
    }
    let mut sink = ByteSink::new();
    put_header(&img.header, img.extras.is_some(), &mut sink)?;
    sink.put_real(img.globals.mu).map_err(FormatError::body)?;
    sink.put_real(img.globals.step).map_err(FormatError::body)?;
    sink.put_unbounded_uint(u64::from(l));
    sink.put_unbounded_int(img.globals.dc_code);

    sink.put_unbounded_uint(img.sections.len() as u64);
    let hfs_bits: Vec<bool> =
        img.sections.iter().flat_map(|s| [s.hfs.code() & 2 != 0, s.hfs.code() & 1 != 0]).collect();
    sink.put_bit_array(&hfs_bits);
    let mut pos = 0usize;
    for s in &img.sections {
        if s.start != pos || s.histogram.l_max() != l {
            return Err(FormatError::Corrupt("sections do not tile the codewords".into()));
        }
        let cw = img.codewords.get(s.range()).ok_or_else(|| FormatError::Corrupt("section past the end".into()))?;
        encode_histogram_as(&s.histogram, s.hfs, &mut sink);
        let payload = ac_encode(cw, &s.histogram).map_err(FormatError::body)?;
        sink.put_unbounded_uint(payload.len() as u64);
        sink.put_bytes(&payload);
        pos += s.len();
    }
    if pos != img.codewords.len() {
        return Err(FormatError::HistogramMismatch { expected: img.codewords.len() as u64, got: pos as u64 });
    }
    if let Some(extras) = &img.extras {
        let expected = img.saturated_count();
        if extras.len() != expected {
            return Err(FormatError::ExtrasMismatch { expected: expected as u64, got: extras.len() as u64 });
        }
        sink.put_unbounded_uint(extras.len() as u64);
        extras.iter().for_each(|&e| sink.put_unbounded_int(e));
    }
    Ok(sink.into_bytes())
}

fn read_header(src: &mut ByteSource<'_>) -> Result<(Header, bool), FormatError> {
    let t = |_| FormatError::TruncatedHeader;
    let magic = src.get_bytes(4).map_err(t)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = src.get_u8().map_err(t)?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let header_err = |e: EntropyError| match e {
        EntropyError::Truncated => FormatError::TruncatedHeader,
        other => FormatError::Corrupt(other.to_string()),
    };
    let n_v = src.get_unbounded_uint().map_err(header_err)?;
    let n_h = src.get_unbounded_uint().map_err(header_err)?;
    let bpp = src.get_unbounded_uint().map_err(header_err)?;
    let kind_code = src.get_u8().map_err(t)?;
    let flags = src.get_u8().map_err(t)?;
    let seed = src.get_unbounded_uint().map_err(header_err)?;
    let m = src.get_unbounded_uint().map_err(header_err)?;
    let csr = src.get_real().map_err(header_err)?;
    let c_const = src.get_real().map_err(header_err)?;

    if !(1..=MAX_DIMENSION).contains(&n_v) || !(1..=MAX_DIMENSION).contains(&n_h) {
        return Err(FormatError::Corrupt(format!("image size {n_v}x{n_h}")));
    }
    if bpp != 8 {
        return Err(FormatError::Corrupt(format!("{bpp} bits per pixel")));
    }
    let kind = MatrixKind::from_code(kind_code).map_err(|e| FormatError::Corrupt(e.to_string()))?;
    if flags & !FLAG_EXTRAS != 0 {
        return Err(FormatError::Corrupt(format!("unknown flags {flags:#04x}")));
    }
    let (gv, gh) = SensingOperator::grid_for(kind, n_v as usize, n_h as usize);
    if m == 0 || m > (gv * gh) as u64 {
        return Err(FormatError::Corrupt(format!("{m} measurements for a {gv}x{gh} canvas")));
    }
    if !(csr > 0.0 && csr <= 1.0) || !(c_const > 0.0) {
        return Err(FormatError::Corrupt("quantizer context out of range".into()));
    }
    let header = Header { n_v: n_v as u32, n_h: n_h as u32, bits_per_pixel: bpp as u32, kind, seed, m, csr, c_const };
    Ok((header, flags & FLAG_EXTRAS != 0))
}

/// Parses a stream. Only the exact byte sequence [`write`] produces for the
/// parsed content is accepted.
pub fn read(bytes: &[u8]) -> Result<CodedImage, FormatError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) { FormatError::TruncatedHeader } else { FormatError::BadMagic });
    }
    let mut src = ByteSource::new(bytes);
    let (header, has_extras) = read_header(&mut src)?;
    let b = FormatError::body;
    let mu = src.get_real().map_err(b)?;
    let step = src.get_real().map_err(b)?;
    let l = src.get_unbounded_uint().map_err(b)?;
    let dc_code = src.get_unbounded_int().map_err(b)?;
    if !(step > 0.0) {
        return Err(FormatError::Corrupt(format!("step {step}")));
    }
    if !(1..=MAX_L).contains(&l) {
        return Err(FormatError::Corrupt(format!("clip level {l}")));
    }
    let l_max = l as u32;
    let globals = Globals { mu, step, l_max, dc_code };

    let expected = header.m - 1;
    let j = src.get_unbounded_uint().map_err(b)?;
    if j > expected || (expected > 0 && j == 0) {
        return Err(FormatError::Corrupt(format!("{j} sections for {expected} codewords")));
    }
    let j = j as usize;
    let hfs_bits = src.get_bit_array(2 * j).map_err(b)?;
    let mut sections = Vec::with_capacity(j);
    let mut codewords = Vec::with_capacity(expected as usize);
    let mut total = 0u64;
    for pair in hfs_bits.chunks(2) {
        let code = u8::from(pair[0]) << 1 | u8::from(pair[1]);
        let hfs = Hfs::from_code(code).ok_or_else(|| FormatError::Corrupt(format!("histogram format {code}")))?;
        let histogram = decode_histogram(hfs, &mut src, l_max).map_err(b)?;
        let n = histogram.total();
        total = total.saturating_add(n);
        if total > expected {
            return Err(FormatError::HistogramMismatch { expected, got: total });
        }
        let len = src.get_unbounded_uint().map_err(b)?;
        if len > src.remaining() as u64 {
            return Err(FormatError::Truncated);
        }
        let payload = src.get_bytes(len as usize).map_err(b)?;
        let start = codewords.len();
        codewords.extend(ac_decode(payload, &histogram, n as usize).map_err(b)?);
        sections.push(Section { start, histogram, hfs });
    }
    if total != expected {
        return Err(FormatError::HistogramMismatch { expected, got: total });
    }
    let img_sat = codewords.iter().filter(|&&c| c == l_max as i32).count() as u64;
    let extras = if has_extras {
        let count = src.get_unbounded_uint().map_err(b)?;
        if count != img_sat {
            return Err(FormatError::ExtrasMismatch { expected: img_sat, got: count });
        }
        let mut v = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let e = src.get_unbounded_int().map_err(b)?;
            if e.unsigned_abs() < l {
                return Err(FormatError::Corrupt(format!("saturated extra {e} inside the clip range")));
            }
            v.push(e);
        }
        Some(v)
    } else {
        None
    };
    if src.remaining() != 0 {
        return Err(FormatError::Corrupt(format!("{} trailing bytes", src.remaining())));
    }
    let img = CodedImage { header, globals, sections, codewords, extras };
    if write(&img)? != bytes {
        return Err(FormatError::Corrupt("non-canonical encoding".into()));
    }
    Ok(img)
}
