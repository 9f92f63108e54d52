use super::io::{unbounded_uint_len, ByteSink, ByteSource};
use super::EntropyError;

/// Counts of merged codewords. Index `i` holds codeword `i - L + 1`, so the
/// alphabet is `-L+1..=L` and the saturated label `-L` is folded into `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    l_max: u32,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(l_max: u32) -> Self {
        assert!(l_max >= 1, "codebook needs L >= 1");
        Self { l_max, counts: vec![0; 2 * l_max as usize] }
    }

    pub fn from_counts(l_max: u32, counts: Vec<u64>) -> Result<Self, EntropyError> {
        if counts.len() != 2 * l_max as usize {
            return Err(EntropyError::Corrupt("histogram length differs from 2L"));
        }
        Ok(Self { l_max, counts })
    }

    pub fn from_codewords(codewords: &[i32], l_max: u32) -> Result<Self, EntropyError> {
        let mut h = Self::new(l_max);
        for &c in codewords {
            let i = h.index_of(c)?;
            h.counts[i] += 1;
        }
        Ok(h)
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().copied().enumerate().filter(|&(_, c)| c > 0)
    }

    pub fn count(&self, codeword: i32) -> u64 {
        self.index_of(codeword).map_or(0, |i| self.counts[i])
    }

    /// Alphabet index of a (possibly unmerged) codeword.
    pub fn index_of(&self, codeword: i32) -> Result<usize, EntropyError> {
        let l = self.l_max as i64;
        let c = codeword as i64;
        if c.abs() > l {
            return Err(EntropyError::CodewordOutOfRange { codeword, l_max: self.l_max });
        }
        let merged = if c == -l { l } else { c };
        Ok((merged + l - 1) as usize)
    }

    pub fn codeword_at(&self, index: usize) -> i32 {
        index as i32 - self.l_max as i32 + 1
    }
}

/// Histogram format selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hfs {
    Full = 0,
    Flagged = 1,
    Indexed = 2,
}

impl Hfs {
    pub const ALL: [Hfs; 3] = [Hfs::Full, Hfs::Flagged, Hfs::Indexed];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

fn bits_for(n: u64) -> u32 {
    // ceil(log2 n) for n >= 1
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

fn indexed_widths(l_max: u32) -> (u32, u32) {
    let a = 2 * u64::from(l_max);
    (bits_for(a + 1), bits_for(a))
}

/// `(format, bytes)` of the shortest encoding of a histogram given by its
/// nonzero `(index, count)` entries.
///
/// Equal byte lengths are decided by the unpadded bit length and then by the
/// lower selector code.
pub fn histogram_cost<I>(l_max: u32, nonzero: I) -> (Hfs, usize)
where
    I: IntoIterator<Item = (usize, u64)>,
{
    let alphabet = 2 * l_max as usize;
    let mut nnz = 0usize;
    let mut count_bytes = 0usize;
    for (_, c) in nonzero {
        nnz += 1;
        count_bytes += unbounded_uint_len(c);
    }
    let (nnz_bits, idx_bits) = indexed_widths(l_max);
    let index_bits = nnz_bits as usize + nnz * idx_bits as usize;
    let candidates = [
        (Hfs::Full, alphabet - nnz + count_bytes, 8 * (alphabet - nnz + count_bytes)),
        (Hfs::Flagged, alphabet.div_ceil(8) + count_bytes, alphabet + 8 * count_bytes),
        (Hfs::Indexed, index_bits.div_ceil(8) + count_bytes, index_bits + 8 * count_bytes),
    ];
    let best =
        candidates.iter().min_by_key(|&&(hfs, bytes, bits)| (bytes, bits, hfs)).copied().expect("three candidates");
    (best.0, best.1)
}

pub fn encode_histogram_as(h: &Histogram, hfs: Hfs, sink: &mut ByteSink) {
    match hfs {
        Hfs::Full => h.counts.iter().for_each(|&c| sink.put_unbounded_uint(c)),
        Hfs::Flagged => {
            let flags: Vec<bool> = h.counts.iter().map(|&c| c > 0).collect();
            sink.put_bit_array(&flags);
            h.nonzero().for_each(|(_, c)| sink.put_unbounded_uint(c));
        }
        Hfs::Indexed => {
            let (nnz_bits, idx_bits) = indexed_widths(h.l_max);
            let idx: Vec<usize> = h.nonzero().map(|(i, _)| i).collect();
            let mut bits = Vec::with_capacity(nnz_bits as usize + idx.len() * idx_bits as usize);
            push_bits(&mut bits, idx.len() as u64, nnz_bits);
            for &i in &idx {
                push_bits(&mut bits, i as u64, idx_bits);
            }
            sink.put_bit_array(&bits);
            h.nonzero().for_each(|(_, c)| sink.put_unbounded_uint(c));
        }
    }
}

fn push_bits(out: &mut Vec<bool>, v: u64, width: u32) {
    out.extend((0..width).rev().map(|b| (v >> b) & 1 == 1));
}

fn read_bits(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

/// Encodes `h` in its shortest format and returns the selector.
pub fn encode_histogram(h: &Histogram, sink: &mut ByteSink) -> Result<Hfs, EntropyError> {
    if h.total() == 0 {
        return Err(EntropyError::EmptyHistogram);
    }
    let (hfs, _) = histogram_cost(h.l_max, h.nonzero());
    encode_histogram_as(h, hfs, sink);
    Ok(hfs)
}

pub fn decode_histogram(hfs: Hfs, source: &mut ByteSource<'_>, l_max: u32) -> Result<Histogram, EntropyError> {
    if l_max == 0 {
        return Err(EntropyError::Corrupt("codebook size zero"));
    }
    let alphabet = 2 * l_max as usize;
    let mut h = Histogram::new(l_max);
    match hfs {
        Hfs::Full => {
            for c in h.counts.iter_mut() {
                *c = source.get_unbounded_uint()?;
            }
        }
        Hfs::Flagged => {
            let flags = source.get_bit_array(alphabet)?;
            for (i, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
                h.counts[i] = nonzero_count(source)?;
            }
        }
        Hfs::Indexed => {
            let (nnz_bits, idx_bits) = indexed_widths(l_max);
            // the nonzero count decides how many index bits follow
            let mut peek = source.clone();
            let nnz_raw = peek.get_bit_array(nnz_bits as usize)?;
            let nnz = read_bits(&nnz_raw) as usize;
            if nnz == 0 || nnz > alphabet {
                return Err(EntropyError::Corrupt("indexed histogram has a bad nonzero count"));
            }
            let all = source.get_bit_array(nnz_bits as usize + nnz * idx_bits as usize)?;
            let mut prev: Option<usize> = None;
            let mut indices = Vec::with_capacity(nnz);
            for chunk in all[nnz_bits as usize..].chunks(idx_bits.max(1) as usize).take(nnz) {
                let i = if idx_bits == 0 { 0 } else { read_bits(chunk) as usize };
                if i >= alphabet || prev.is_some_and(|p| i <= p) {
                    return Err(EntropyError::Corrupt("indexed histogram indices not increasing"));
                }
                prev = Some(i);
                indices.push(i);
            }
            for i in indices {
                h.counts[i] = nonzero_count(source)?;
            }
        }
    }
    let mut total: u64 = 0;
    for &c in &h.counts {
        total = total.checked_add(c).ok_or(EntropyError::Corrupt("histogram total overflows"))?;
    }
    if total == 0 {
        return Err(EntropyError::EmptyHistogram);
    }
    Ok(h)
}

fn nonzero_count(source: &mut ByteSource<'_>) -> Result<u64, EntropyError> {
    match source.get_unbounded_uint()? {
        0 => Err(EntropyError::Corrupt("zero count where a nonzero count is flagged")),
        c => Ok(c),
    }
}

/// Estimated arithmetic-coded length in bits, rounded up to whole bytes:
/// `8 * ceil(sum_c h(c) log2(M_s / h(c)) / 8)` over nonzero counts.
pub fn estimate_ac_len(h: &Histogram) -> Result<u64, EntropyError> {
    estimate_from_counts(h.counts.iter().copied()).ok_or(EntropyError::EmptyHistogram)
}

pub(crate) fn estimate_from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Option<u64> {
    let mut total = 0u64;
    let mut nnz = 0usize;
    let mut sum_h_log_h = 0.0f64;
    for c in counts.into_iter().filter(|&c| c > 0) {
        total += c;
        nnz += 1;
        sum_h_log_h += c as f64 * (c as f64).log2();
    }
    match nnz {
        0 => None,
        1 => Some(0),
        _ => {
            let bits = total as f64 * (total as f64).log2() - sum_h_log_h;
            // absorbs rounding when the entropy is an exact byte multiple
            let bytes = (bits / 8.0 - 1e-9).ceil().max(0.0);
            Some(8 * bytes as u64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(l: u32, counts: &[u64]) -> Histogram {
        Histogram::from_counts(l, counts.to_vec()).unwrap()
    }

    fn encoded(h: &Histogram, hfs: Hfs) -> Vec<u8> {
        let mut s = ByteSink::new();
        encode_histogram_as(h, hfs, &mut s);
        s.into_bytes()
    }

    #[test]
    fn merged_label_indexing() {
        let h = Histogram::from_codewords(&[-2, 2, 0, 1, -1], 2).unwrap();
        assert_eq!(h.counts(), &[1, 1, 1, 2]);
        assert_eq!(h.codeword_at(0), -1);
        assert_eq!(h.codeword_at(3), 2);
        assert_eq!(h.alphabet_size(), 4);
        assert!(Histogram::from_codewords(&[3], 2).is_err());
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate_ac_len(&hist(1, &[0, 9])).unwrap(), 0);
        assert_eq!(estimate_ac_len(&hist(1, &[4, 4])).unwrap(), 8);
        let oracle = 3.0 * (4.0f64 / 3.0).log2() + 2.0;
        assert!((oracle - 3.245).abs() < 1e-3);
        assert_eq!(estimate_ac_len(&hist(1, &[3, 1])).unwrap(), 8);
        assert_eq!(estimate_ac_len(&hist(2, &[0; 4])), Err(EntropyError::EmptyHistogram));
    }

    #[test]
    fn single_nonzero_prefers_indexed() {
        let mut counts = vec![0; 8];
        counts[5] = 17;
        let h = hist(4, &counts);
        let mut s = ByteSink::new();
        assert_eq!(encode_histogram(&h, &mut s).unwrap(), Hfs::Indexed);
        assert_eq!(encoded(&h, Hfs::Full).len(), 8);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn dense_small_counts_prefer_full() {
        let h = hist(4, &[1, 5, 127, 3, 9, 2, 100, 1]);
        let mut s = ByteSink::new();
        assert_eq!(encode_histogram(&h, &mut s).unwrap(), Hfs::Full);
        assert_eq!(s.len(), 8);
        assert_eq!(encoded(&h, Hfs::Flagged).len(), 9);
    }

    #[test]
    fn empty_histogram_rejected() {
        assert!(encode_histogram(&Histogram::new(3), &mut ByteSink::new()).is_err());
        let bytes = encoded(&Histogram::new(3), Hfs::Full);
        assert!(decode_histogram(Hfs::Full, &mut ByteSource::new(&bytes), 3).is_err());
    }

    #[test]
    fn flagged_zero_count_is_corrupt() {
        // flags 1000_0000, count 0
        let bytes = [0x80, 0x00];
        assert!(matches!(
            decode_histogram(Hfs::Flagged, &mut ByteSource::new(&bytes), 4),
            Err(EntropyError::Corrupt(_))
        ));
    }

    fn arb_hist() -> impl Strategy<Value = Histogram> {
        (1u32..40).prop_flat_map(|l| {
            prop::collection::vec(prop_oneof![3 => Just(0u64), 2 => 1u64..200, 1 => 200u64..100_000], 2 * l as usize)
                .prop_filter("nonempty", |c| c.iter().any(|&v| v > 0))
                .prop_map(move |c| Histogram::from_counts(l, c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn all_formats_round_trip(h in arb_hist()) {
            for hfs in Hfs::ALL {
                let bytes = encoded(&h, hfs);
                let mut src = ByteSource::new(&bytes);
                prop_assert_eq!(&decode_histogram(hfs, &mut src, h.l_max()).unwrap(), &h);
                prop_assert_eq!(src.remaining(), 0);
            }
        }

        #[test]
        fn chosen_format_is_the_shortest(h in arb_hist()) {
            let lens: Vec<usize> = Hfs::ALL.iter().map(|&f| encoded(&h, f).len()).collect();
            let mut s = ByteSink::new();
            let hfs = encode_histogram(&h, &mut s).unwrap();
            prop_assert_eq!(s.len(), *lens.iter().min().unwrap());
            let (cost_hfs, cost_bytes) = histogram_cost(h.l_max(), h.nonzero());
            prop_assert_eq!(cost_hfs, hfs);
            prop_assert_eq!(cost_bytes, s.len());
        }
    }
}
