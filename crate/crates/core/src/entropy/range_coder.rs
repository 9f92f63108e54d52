//! Static range coder over the merged codeword alphabet.
//!
//! State is a 32-bit `range` and a 32-bit `low` kept in a 64-bit word so a
//! carry out of bit 31 can be detected and propagated into bytes already
//! written. For a symbol with cumulative count `cum`, count `f` and section
//! total `T`, the interval becomes
//! `[low + floor(range*cum/T), low + floor(range*(cum+f)/T))`.
//! While `range < 2^24` the top byte of `low` is emitted. To finish, the
//! smallest value in `[low, low+range)` whose low 24 bits are zero is
//! written as one more byte and trailing zero bytes are dropped; a decoder
//! reads zeros past the end of the payload. A section with a single distinct
//! codeword has an empty payload.

use super::histogram::Histogram;
use super::EntropyError;

/// Largest section total the coder accepts.
pub const MAX_TOTAL: u64 = 1 << 24;

const TOP: u64 = 1 << 32;
const BOTTOM: u64 = 1 << 24;

struct Model {
    cum: Vec<u64>,
    total: u64,
}

impl Model {
    fn new(h: &Histogram) -> Result<Self, EntropyError> {
        let mut cum = Vec::with_capacity(h.alphabet_size() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for &c in h.counts() {
            acc += c;
            cum.push(acc);
        }
        if acc == 0 {
            return Err(EntropyError::EmptyHistogram);
        }
        if acc > MAX_TOTAL {
            return Err(EntropyError::TotalTooLarge(acc));
        }
        Ok(Self { cum, total: acc })
    }

    fn bounds(&self, range: u64, i: usize) -> (u64, u64) {
        (range * self.cum[i] / self.total, range * self.cum[i + 1] / self.total)
    }
}

fn single_symbol(h: &Histogram) -> Option<usize> {
    let mut nz = h.nonzero();
    match (nz.next(), nz.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

pub fn ac_encode(codewords: &[i32], h: &Histogram) -> Result<Vec<u8>, EntropyError> {
    let model = Model::new(h)?;
    if single_symbol(h).is_some() {
        for &c in codewords {
            if h.count(c) == 0 {
                return Err(EntropyError::ZeroFrequencySymbol(c));
            }
        }
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut low = 0u64;
    let mut range = TOP;
    for &c in codewords {
        let i = h.index_of(c)?;
        if h.counts()[i] == 0 {
            return Err(EntropyError::ZeroFrequencySymbol(c));
        }
        let (lo, hi) = model.bounds(range, i);
        low += lo;
        range = hi - lo;
        if low >= TOP {
            carry(&mut out);
            low -= TOP;
        }
        while range < BOTTOM {
            out.push((low >> 24) as u8);
            low = (low << 8) & (TOP - 1);
            range <<= 8;
        }
    }
    let mut v = (low + BOTTOM - 1) & !(BOTTOM - 1);
    if v >= TOP {
        carry(&mut out);
        v -= TOP;
    }
    out.push((v >> 24) as u8);
    while out.last() == Some(&0) {
        out.pop();
    }
    Ok(out)
}

fn carry(out: &mut [u8]) {
    for b in out.iter_mut().rev() {
        *b = b.wrapping_add(1);
        if *b != 0 {
            return;
        }
    }
    unreachable!("carry past the first byte of the stream");
}

pub fn ac_decode(bytes: &[u8], h: &Histogram, n_symbols: usize) -> Result<Vec<i32>, EntropyError> {
    let model = Model::new(h)?;
    if let Some(i) = single_symbol(h) {
        if !bytes.is_empty() {
            return Err(EntropyError::Corrupt("payload present for a single-symbol section"));
        }
        return Ok(vec![h.codeword_at(i); n_symbols]);
    }
    let mut pos = 0usize;
    let mut next_byte = || {
        let b = bytes.get(pos).copied().unwrap_or(0);
        pos += 1;
        u64::from(b)
    };
    let mut value = 0u64;
    for _ in 0..4 {
        value = (value << 8) | next_byte();
    }
    let mut range = TOP;
    let symbols = h.alphabet_size();
    let mut out = Vec::with_capacity(n_symbols);
    for _ in 0..n_symbols {
        if value >= range {
            return Err(EntropyError::Corrupt("range coder value outside the interval"));
        }
        // largest i with floor(range*cum[i]/T) <= value
        let (mut a, mut b) = (0usize, symbols);
        while b - a > 1 {
            let mid = (a + b) / 2;
            if range * model.cum[mid] / model.total <= value {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (lo, hi) = model.bounds(range, a);
        if hi <= value || hi == lo {
            return Err(EntropyError::Corrupt("range coder decoded a zero-count symbol"));
        }
        out.push(h.codeword_at(a));
        value -= lo;
        range = hi - lo;
        while range < BOTTOM {
            value = (value << 8) | next_byte();
            range <<= 8;
        }
    }
    Ok(out)
}
