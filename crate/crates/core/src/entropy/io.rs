//! Byte-aligned primitive number formats.
//!
//! * unbounded unsigned integers: 7 payload bits per byte, most significant
//!   group first, continuation bit (MSB) set on every byte but the last;
//! * unbounded signed integers: folded (`n >= 0 -> 2n`, `n < 0 -> -2n - 1`)
//!   and then coded as unsigned;
//! * reals: an exact `mantissa * 2^exponent` split with an odd (or zero)
//!   integer mantissa, both coded as unbounded signed integers;
//! * bit arrays: MSB-first, zero padded to a whole byte;
//! * bounded unsigned arrays: `n` values of `b` bits each, as one bit array.

use super::EntropyError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ByteSink {
    bytes: Vec<u8>,
}

impl ByteSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn put_u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    pub fn put_bytes(&mut self, v: &[u8]) {
        self.bytes.extend_from_slice(v);
    }

    pub fn put_unbounded_uint(&mut self, v: u64) {
        let groups = unbounded_uint_len(v);
        for g in (0..groups).rev() {
            let payload = ((v >> (7 * g)) & 0x7f) as u8;
            self.bytes.push(if g == 0 { payload } else { payload | 0x80 });
        }
    }

    pub fn put_unbounded_int(&mut self, v: i64) {
        self.put_unbounded_uint(fold(v));
    }

    pub fn put_real(&mut self, v: f64) -> Result<(), EntropyError> {
        let (mantissa, exponent) = split_real(v)?;
        self.put_unbounded_int(mantissa);
        self.put_unbounded_int(exponent);
        Ok(())
    }

    pub fn put_bit_array(&mut self, bits: &[bool]) {
        for chunk in bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                if b {
                    byte |= 0x80 >> i;
                }
            }
            self.bytes.push(byte);
        }
    }

    pub fn put_bounded_uint_array(&mut self, values: &[u64], bits: u32) -> Result<(), EntropyError> {
        let mut packed = Vec::with_capacity(values.len() * bits as usize);
        for &v in values {
            if bits < 64 && v >> bits != 0 {
                return Err(EntropyError::OutOfRange { value: v, bits });
            }
            packed.extend((0..bits).rev().map(|i| (v >> i) & 1 == 1));
        }
        self.put_bit_array(&packed);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ByteSource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteSource<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn get_u8(&mut self) -> Result<u8, EntropyError> {
        let b = *self.bytes.get(self.pos).ok_or(EntropyError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    pub fn get_bytes(&mut self, n: usize) -> Result<&'a [u8], EntropyError> {
        let end = self.pos.checked_add(n).ok_or(EntropyError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(EntropyError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    pub fn get_unbounded_uint(&mut self) -> Result<u64, EntropyError> {
        let mut v: u64 = 0;
        loop {
            let b = self.get_u8()?;
            if v >> 57 != 0 {
                return Err(EntropyError::Corrupt("unbounded integer overflows 64 bits"));
            }
            v = (v << 7) | u64::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
    }

    pub fn get_unbounded_int(&mut self) -> Result<i64, EntropyError> {
        Ok(unfold(self.get_unbounded_uint()?))
    }

    pub fn get_real(&mut self) -> Result<f64, EntropyError> {
        let mantissa = self.get_unbounded_int()?;
        let exponent = self.get_unbounded_int()?;
        join_real(mantissa, exponent)
    }

    pub fn get_bit_array(&mut self, n: usize) -> Result<Vec<bool>, EntropyError> {
        let bytes = self.get_bytes(n.div_ceil(8))?;
        Ok((0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect())
    }

    pub fn get_bounded_uint_array(&mut self, n: usize, bits: u32) -> Result<Vec<u64>, EntropyError> {
        let raw = self.get_bit_array(n * bits as usize)?;
        Ok(raw
            .chunks(bits.max(1) as usize)
            .take(n)
            .map(|c| if bits == 0 { 0 } else { c.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)) })
            .collect())
    }
}

/// Number of bytes the unbounded unsigned format uses for `v`.
pub fn unbounded_uint_len(v: u64) -> usize {
    let bits = 64 - v.leading_zeros() as usize;
    bits.div_ceil(7).max(1)
}

pub fn fold(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unfold(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Exact `(mantissa, exponent)` with `v = mantissa * 2^exponent` and an odd
/// mantissa (or `(0, 0)` for zero).
pub fn split_real(v: f64) -> Result<(i64, i64), EntropyError> {
    if !v.is_finite() {
        return Err(EntropyError::NonFinite);
    }
    if v == 0.0 {
        return Ok((0, 0));
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mut mantissa, mut exponent) =
        if biased == 0 { (fraction, -1074) } else { (fraction | (1u64 << 52), biased - 1075) };
    let shift = mantissa.trailing_zeros();
    mantissa >>= shift;
    exponent += i64::from(shift);
    Ok((sign * mantissa as i64, exponent))
}

pub fn join_real(mantissa: i64, exponent: i64) -> Result<f64, EntropyError> {
    if mantissa == 0 {
        return Ok(0.0);
    }
    if mantissa.unsigned_abs() >= 1u64 << 53 || !(-1200..=1100).contains(&exponent) {
        return Err(EntropyError::Corrupt("real number out of range"));
    }
    // scale in exact power-of-two steps; the final product is representable
    let mut v = mantissa as f64;
    let mut e = exponent;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    if !v.is_finite() {
        return Err(EntropyError::Corrupt("real number overflows"));
    }
    Ok(v)
}
