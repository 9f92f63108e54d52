//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use csic_core::bitstream::{CodedImage, Globals, Header};
use csic_core::entropy::{
    estimated_section_len, partition_sections, ByteSink, ByteSource, Histogram, DEFAULT_MERGE_WINDOW,
};
use csic_core::sensing::LinearOperator;
use csic_core::{ImagePlane, MatrixKind, SensingOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Matrix = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Orthonormal DCT-II matrix from the cosine formula.
pub fn dct_matrix(n: usize) -> Matrix {
    (0..n)
        .map(|k| {
            let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n).map(|j| a * (PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos()).collect()
        })
        .collect()
}

/// Orthonormal Walsh matrix: Hadamard rows sorted by number of sign changes.
pub fn walsh_matrix(n: usize) -> Matrix {
    assert!(n.is_power_of_two());
    let mut rows: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()).collect();
    let changes = |r: &Vec<f64>| r.windows(2).filter(|w| w[0] != w[1]).count();
    rows.sort_by_key(changes);
    let s = 1.0 / (n as f64).sqrt();
    rows.into_iter().map(|r| r.into_iter().map(|v| v * s).collect()).collect()
}

/// Zig-zag scan order: anti-diagonals by increasing `r + c`, odd diagonals
/// downward (increasing row), even diagonals upward.
pub fn zigzag(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    cells.sort_by_key(|&(r, c)| {
        let d = r + c;
        (d, if d % 2 == 1 { r as isize } else { -(r as isize) })
    });
    cells
}

pub fn matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn matvec_t(a: &Matrix, z: &[f64]) -> Vec<f64> {
    let n = a.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (row, &w) in a.iter().zip(z) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v * w;
        }
    }
    out
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Dense `Phi` of `op`, built from the transform formulas plus the
/// operator's published random choices (permutation, selection, mixing).
pub fn dense_phi(op: &SensingOperator) -> Matrix {
    let (gv, gh) = op.grid();
    let n = gv * gh;
    let m = op.measurements();
    let basis = |len: usize, wht: bool| if wht { walsh_matrix(len) } else { dct_matrix(len) };
    let wht = op.kind().uses_wht();
    let base: Matrix = match op.kind() {
        MatrixKind::SrmDct | MatrixKind::SrmWht => {
            let t = basis(n, wht);
            let perm = op.permutation().expect("structured kinds permute");
            op.selected_coefficients()
                .iter()
                .map(|&k| {
                    let mut row = vec![0.0; n];
                    for (i, &p) in perm.iter().enumerate() {
                        row[p] = t[k][i];
                    }
                    row
                })
                .collect()
        }
        _ => {
            let (bv, bh) = (basis(gv, wht), basis(gh, wht));
            zigzag(gv, gh)
                .into_iter()
                .take(m)
                .map(|(r, c)| {
                    let mut row = vec![0.0; n];
                    for j in 0..gh {
                        for i in 0..gv {
                            row[j * gv + i] = bv[r][i] * bh[c][j];
                        }
                    }
                    row
                })
                .collect()
        }
    };
    match op.mixing() {
        None => base,
        Some((signs, order)) => {
            let h = dct_matrix(m - 1);
            let mut out = vec![base[0].clone()];
            for &o in order {
                let mut row = vec![0.0; n];
                for (j, s) in signs.iter().enumerate() {
                    let w = h[o][j] * s;
                    for (acc, v) in row.iter_mut().zip(&base[j + 1]) {
                        *acc += w * v;
                    }
                }
                out.push(row);
            }
            out
        }
    }
}

/// Cost of the best contiguous partition under the section length
/// estimate, by exhaustive dynamic programming.
pub fn optimal_partition_bits(codewords: &[i32], l_max: u32) -> u64 {
    let n = codewords.len();
    let mut best = vec![u64::MAX; n + 1];
    best[0] = 0;
    for end in 1..=n {
        for start in 0..end {
            let h = Histogram::from_codewords(&codewords[start..end], l_max).unwrap();
            let cost = best[start] + estimated_section_len(&h).unwrap();
            best[end] = best[end].min(cost);
        }
    }
    best[n]
}

/// Codewords in `-L..=L` (the two ends merged to `L`) with a tunable skew.
pub fn random_codewords(r: &mut ChaCha8Rng, n: usize, l_max: u32, spread: f64) -> Vec<i32> {
    let l = l_max as i32;
    (0..n)
        .map(|_| {
            let u: f64 = r.gen_range(-1.0f64..1.0);
            let mag = (-(1.0 - u.abs()).max(1e-12).ln() * spread).round() as i32;
            let c = (mag * u.signum() as i32).clamp(-l, l);
            if c == -l {
                l
            } else {
                c
            }
        })
        .collect()
}

/// A structurally valid coded image around random codewords.
pub fn random_coded_image(r: &mut ChaCha8Rng) -> CodedImage {
    let l_max = if r.gen_bool(0.1) { r.gen_range(1..=3) } else { r.gen_range(1..=120) };
    let n_v = r.gen_range(4..=40u32);
    let n_h = r.gen_range(4..=40u32);
    let kind = MatrixKind::ALL[r.gen_range(0..6)];
    let m = r.gen_range(2..=(n_v * n_h) as u64);
    let spread = r.gen_range(0.05..f64::from(l_max).max(1.0));
    let codewords = random_codewords(r, (m - 1) as usize, l_max, spread);
    let sections = partition_sections(&codewords, l_max, DEFAULT_MERGE_WINDOW).unwrap().sections;
    let l = l_max as i32;
    let extras = r.gen_bool(0.8).then(|| {
        codewords
            .iter()
            .filter(|&&c| c == l)
            .map(|_| {
                let e = i64::from(l) + r.gen_range(0..50);
                if r.gen_bool(0.5) {
                    -e
                } else {
                    e
                }
            })
            .collect()
    });
    CodedImage {
        header: Header {
            n_v,
            n_h,
            bits_per_pixel: 8,
            kind,
            seed: if kind.is_seeded() { r.gen() } else { 0 },
            m,
            csr: r.gen_range(0.01..1.0),
            c_const: r.gen_range(0.5..4.0),
        },
        globals: Globals {
            mu: r.gen_range(-100.0..100.0),
            step: r.gen_range(0.1..60.0),
            l_max,
            dc_code: r.gen_range(-100_000..100_000),
        },
        sections,
        codewords,
        extras,
    }
}

pub fn load_corpus() -> Vec<(String, ImagePlane)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    csic_core::harness::load_corpus(&dir).expect("corpus directory is readable")
}

pub fn corpus_image(name: &str) -> ImagePlane {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    ImagePlane::load(dir.join(format!("{name}.pgm"))).expect("corpus image")
}

/// Byte range of the section layer: after the globals, before the extras.
pub fn section_span(coded: &CodedImage, bytes: &[u8]) -> std::ops::Range<usize> {
    let mut src = ByteSource::new(bytes);
    src.get_bytes(5).unwrap();
    for _ in 0..3 {
        src.get_unbounded_uint().unwrap();
    }
    src.get_bytes(2).unwrap();
    src.get_unbounded_uint().unwrap();
    src.get_unbounded_uint().unwrap();
    for _ in 0..4 {
        src.get_real().unwrap();
    }
    src.get_unbounded_uint().unwrap();
    src.get_unbounded_int().unwrap();
    let start = src.position();
    let mut tail = ByteSink::new();
    if let Some(extras) = &coded.extras {
        tail.put_unbounded_uint(extras.len() as u64);
        for &e in extras {
            tail.put_unbounded_int(e);
        }
    }
    start..bytes.len() - tail.len()
}
