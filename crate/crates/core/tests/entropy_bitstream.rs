mod common;

use common::*;
use csic_core::bitstream::{self, FormatError};
use csic_core::codec::{encode, EncoderConfig};
use csic_core::entropy::{ac_decode, ac_encode, partition_sections, Histogram};
use csic_core::MatrixKind;
use rand::Rng;

#[test]
fn random_streams_round_trip() {
    let mut r = rng(42);
    for _ in 0..300 {
        let coded = random_coded_image(&mut r);
        let bytes = bitstream::write(&coded).unwrap();
        assert_eq!(bitstream::read(&bytes).unwrap(), coded);
    }
}

#[test]
fn sections_decode_independently() {
    let mut r = rng(7);
    for _ in 0..100 {
        let l = r.gen_range(1..40);
        let n = r.gen_range(1..3000);
        let spread = r.gen_range(0.1..10.0);
        let cw = random_codewords(&mut r, n, l, spread);
        let p = partition_sections(&cw, l, 4).unwrap();
        for s in &p.sections {
            let seg = &cw[s.range()];
            let h = Histogram::from_codewords(seg, l).unwrap();
            assert_eq!(h, s.histogram);
            assert_eq!(ac_decode(&ac_encode(seg, &h).unwrap(), &h, seg.len()).unwrap(), seg);
        }
    }
}

#[test]
fn single_byte_flips_never_pass_silently() {
    let img = corpus_image("camera");
    let enc = encode(&img, &EncoderConfig::new(MatrixKind::Dct2d, 0.1)).unwrap();
    let span = section_span(&enc.coded, &enc.bytes);
    assert!(span.len() > 100);
    let mut r = rng(2024);
    let mut rejected = 0;
    for _ in 0..1000 {
        let mut bytes = enc.bytes.clone();
        let pos = r.gen_range(span.clone());
        bytes[pos] ^= r.gen_range(1..=255u8);
        match bitstream::read(&bytes) {
            Err(_) => rejected += 1,
            Ok(parsed) => assert_ne!(parsed.codewords, enc.coded.codewords, "flip at {pos} accepted silently"),
        }
    }
    assert!(rejected > 0);
}

#[test]
fn error_kinds_are_distinct() {
    let img = corpus_image("coins");
    let bytes = encode(&img, &EncoderConfig::new(MatrixKind::SrmDct, 0.05)).unwrap().bytes;
    let code = |b: &[u8]| bitstream::read(b).unwrap_err().exit_code();
    assert_eq!(code(b"CSI"), 5);
    assert_eq!(code(b"PNG\x01rest"), 3);
    let mut v = bytes.clone();
    v[4] = 2;
    assert_eq!(code(&v), 4);
    assert_eq!(code(&bytes[..bytes.len() - 1]), 5);
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(matches!(bitstream::read(&longer), Err(FormatError::Corrupt(_))));
}
