//! Lossless layer: primitive number formats, histogram serialization, a
//! static range coder and the greedy section partitioning of the codeword
//! sequence.

mod histogram;
mod io;
mod partition;
mod range_coder;

pub use histogram::{
    decode_histogram, encode_histogram, encode_histogram_as, estimate_ac_len, histogram_cost, Hfs, Histogram,
};
pub use io::{fold, join_real, split_real, unbounded_uint_len, unfold, ByteSink, ByteSource};
pub use partition::{estimated_section_len, partition_sections, Partition, Section, DEFAULT_MERGE_WINDOW};
pub use range_coder::{ac_decode, ac_encode, MAX_TOTAL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EntropyError {
    #[error("unexpected end of stream")]
    Truncated,
    #[error("corrupt stream: {0}")]
    Corrupt(&'static str),
    #[error("codeword {0} has zero count in the section histogram")]
    ZeroFrequencySymbol(i32),
    #[error("codeword {codeword} outside the alphabet of L = {l_max}")]
    CodewordOutOfRange { codeword: i32, l_max: u32 },
    #[error("value {value} does not fit in {bits} bits")]
    OutOfRange { value: u64, bits: u32 },
    #[error("non-finite real number")]
    NonFinite,
    #[error("histogram has no nonzero count")]
    EmptyHistogram,
    #[error("histogram total {0} exceeds the coder limit")]
    TotalTooLarge(u64),
}
