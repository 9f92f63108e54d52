use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csic_core::codec::{zero_fill, EncoderConfig};
use csic_core::metrics::ssim;
use csic_core::{bitstream, ImagePlane, MatrixKind};
use tempfile::TempDir;

fn csic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csic")).args(args).output().expect("binary runs")
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.pgm"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("no_such_image.pgm");
    let out = csic(&["encode", s(&missing), s(&dir.path().join("x.csic"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_image.pgm"));
}

#[test]
fn bad_flags_fail() {
    let dir = TempDir::new().unwrap();
    let out = csic(&["encode", s(&corpus("camera")), s(&dir.path().join("x.csic")), "--matrix", "fourier"]);
    assert!(!out.status.success());
    let out = csic(&["encode", s(&corpus("camera")), s(&dir.path().join("x.csic")), "--csr", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn header_carries_measurement_count() {
    let dir = TempDir::new().unwrap();
    let stream = dir.path().join("camera.csic");
    ok(&csic(&["encode", s(&corpus("camera")), s(&stream), "--matrix", "dct2d", "--csr", "0.1"]));
    let coded = bitstream::read(&fs::read(&stream).unwrap()).unwrap();
    assert_eq!(coded.header.m, 6554);
    assert_eq!((coded.header.n_v, coded.header.n_h), (256, 256));
}

#[test]
fn full_ratio_fine_step_round_trip() {
    let dir = TempDir::new().unwrap();
    let (stream, decoded) = (dir.path().join("m.csic"), dir.path().join("m.pgm"));
    ok(&csic(&["encode", s(&corpus("moon")), s(&stream), "--csr", "1.0", "--step-override", "1.0"]));
    ok(&csic(&["decode", s(&stream), s(&decoded)]));
    let a = ImagePlane::load(corpus("moon")).unwrap();
    let b = ImagePlane::load(&decoded).unwrap();
    assert!(ssim(&a, &b).unwrap() >= 0.99);
}

#[test]
fn constant_image_decodes_exactly() {
    let dir = TempDir::new().unwrap();
    let img = ImagePlane::filled(40, 56, 77).unwrap();
    let src = dir.path().join("flat.pgm");
    img.save(&src).unwrap();
    for matrix in ["dct2d", "srm-dct", "rot-dct2d"] {
        let (stream, out) = (dir.path().join("flat.csic"), dir.path().join("flat_out.pgm"));
        ok(&csic(&["encode", s(&src), s(&stream), "--matrix", matrix, "--csr", "0.05", "--seed", "4"]));
        ok(&csic(&["decode", s(&stream), s(&out)]));
        assert_eq!(ImagePlane::load(&out).unwrap(), img, "{matrix}");
    }
}

#[test]
fn decoding_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let stream = dir.path().join("c.csic");
    ok(&csic(&["encode", s(&corpus("coins")), s(&stream), "--matrix", "srm-wht", "--seed", "9"]));
    for algo in ["gaptv", "damp"] {
        let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
        ok(&csic(&["decode", s(&stream), s(&a), "--algo", algo, "--iters", "15"]));
        ok(&csic(&["decode", s(&stream), s(&b), "--algo", algo, "--iters", "15"]));
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{algo}");
    }
}

#[test]
fn both_algorithms_beat_zero_fill() {
    let dir = TempDir::new().unwrap();
    let stream = dir.path().join("cam.csic");
    ok(&csic(&["encode", s(&corpus("camera")), s(&stream)]));
    let original = ImagePlane::load(corpus("camera")).unwrap();
    let baseline =
        ssim(&original, &zero_fill(&original, &EncoderConfig::new(MatrixKind::Dct2d, 0.1)).unwrap()).unwrap();
    for algo in ["gaptv", "damp"] {
        let out = dir.path().join(format!("{algo}.pgm"));
        ok(&csic(&["decode", s(&stream), s(&out), "--algo", algo]));
        let score = ssim(&original, &ImagePlane::load(&out).unwrap()).unwrap();
        assert!(score > baseline, "{algo}: {score} vs zero-fill {baseline}");
    }
}

#[test]
fn corrupt_streams_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let stream = dir.path().join("c.csic");
    ok(&csic(&["encode", s(&corpus("brick")), s(&stream)]));
    let good = fs::read(&stream).unwrap();
    let out = dir.path().join("o.pgm");
    let cases: [(Vec<u8>, i32); 3] = [
        (b"JPEG....".to_vec(), 3),
        ([&good[..4], &[9u8][..], &good[5..]].concat(), 4),
        (good[..good.len() / 2].to_vec(), 5),
    ];
    for (bytes, code) in cases {
        fs::write(&stream, bytes).unwrap();
        assert_eq!(csic(&["decode", s(&stream), s(&out)]).status.code(), Some(code));
    }
}

#[test]
fn empty_corpus_gives_header_only_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    ok(&csic(&["bench", s(dir.path()), "--out", s(&csv)]));
    assert_eq!(fs::read_to_string(&csv).unwrap(), "image,matrix,algo,csr,step,bytes,ssim,psnr,enc_ms,dec_ms\n");
}

#[test]
fn bench_writes_rows_and_histograms() {
    let dir = TempDir::new().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir(&corpus_dir).unwrap();
    ImagePlane::from_fn(32, 32, |r, c| ((r * 7) ^ (c * 5)) as u8).unwrap().save(corpus_dir.join("xor.pgm")).unwrap();
    ImagePlane::from_fn(32, 32, |r, c| (r * 4 + c * 3) as u8).unwrap().save(corpus_dir.join("ramp.pgm")).unwrap();
    let baseline = dir.path().join("jpeg.csv");
    fs::write(&baseline, "image,bytes,ssim,codec\nramp,60,0.9,jpeg\n").unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(name);
        ok(&csic(&[
            "bench",
            s(&corpus_dir),
            "--out",
            s(&csv),
            "--csrs",
            "0.1,0.2,0.4",
            "--matrices",
            "dct2d,srm-wht",
            "--algos",
            "gaptv,damp",
            "--iters",
            "10",
            "--no-timing",
            "--hist-dir",
            s(&dir.path().join("hist")),
            "--baseline",
            s(&baseline),
        ]));
        fs::read_to_string(csv).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first.lines().count(), 1 + 2 * 2 * 3 * 2);
    assert!(first.lines().nth(1).unwrap().starts_with("ramp,dct2d,gaptv,0.1,"));
    assert_eq!(first, run("b.csv"));
    let hist = fs::read_to_string(dir.path().join("hist/xor_srm-wht.csv")).unwrap();
    assert!(hist.starts_with("codeword,count\n"));
    assert!(dir.path().join("a.baseline.csv").exists());
}
