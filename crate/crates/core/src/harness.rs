//! Quality-versus-size sweeps over an image corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::codec::{decode, encode, EncoderConfig};
use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::metrics::{psnr, ssim};
use crate::parallel;
use crate::recon::{Algorithm, ReconConfig};
use crate::sensing::MatrixKind;

pub const CSV_HEADER: [&str; 10] =
    ["image", "matrix", "algo", "csr", "step", "bytes", "ssim", "psnr", "enc_ms", "dec_ms"];

/// Compression ratios of the reference sweep.
pub const REFERENCE_CSRS: [f64; 8] = [0.02, 0.03, 0.04, 0.05, 0.07, 0.10, 0.15, 0.20];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub matrix: MatrixKind,
    pub algo: Algorithm,
    pub csr: f64,
    pub step: f64,
    pub bytes: usize,
    pub ssim: f64,
    pub psnr: f64,
    pub enc_ms: f64,
    pub dec_ms: f64,
}

impl BenchRow {
    pub fn record(&self) -> [String; 10] {
        [
            self.image.clone(),
            self.matrix.name().to_string(),
            self.algo.name().to_string(),
            format!("{}", self.csr),
            format!("{:.6}", self.step),
            self.bytes.to_string(),
            format!("{:.6}", self.ssim),
            format!("{:.4}", self.psnr),
            format!("{:.3}", self.enc_ms),
            format!("{:.3}", self.dec_ms),
        ]
    }
}

/// Codeword counts of one encoding, `-L..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodewordHistogram {
    pub image: String,
    pub matrix: MatrixKind,
    pub csr: f64,
    pub counts: BTreeMap<i32, u64>,
}

impl CodewordHistogram {
    pub fn from_codewords(image: &str, matrix: MatrixKind, csr: f64, l_max: u32, codewords: &[i32]) -> Self {
        let l = l_max as i32;
        let mut counts: BTreeMap<i32, u64> = (-l..=l).map(|c| (c, 0)).collect();
        for &c in codewords {
            *counts.entry(c).or_insert(0) += 1;
        }
        Self { image: image.to_string(), matrix, csr, counts }
    }

    /// Empirical entropy in bits per symbol.
    pub fn entropy(&self) -> f64 {
        let total: u64 = self.counts.values().sum();
        if total == 0 {
            return 0.0;
        }
        self.counts
            .values()
            .filter(|&&n| n > 0)
            .map(|&n| {
                let p = n as f64 / total as f64;
                -p * p.log2()
            })
            .sum()
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.image, self.matrix.name())
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["codeword", "count"]).map_err(csv_err)?;
        for (c, n) in &self.counts {
            w.write_record([c.to_string(), n.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Codeword entropy in bits per symbol.
pub fn codeword_entropy(codewords: &[i32]) -> f64 {
    CodewordHistogram::from_codewords("", MatrixKind::Dct2d, 0.0, 0, codewords).entropy()
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub csrs: Vec<f64>,
    pub matrices: Vec<MatrixKind>,
    pub algos: Vec<Algorithm>,
    pub seed: u64,
    pub c_const: f64,
    pub step_override: Option<f64>,
    /// Ratio whose codewords are dumped per (image, matrix).
    pub histogram_csr: f64,
    /// Reconstruction settings; the algorithm field is replaced per row.
    pub recon: ReconConfig,
    /// Write zero in the timing columns so the CSV is reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            csrs: REFERENCE_CSRS.to_vec(),
            matrices: MatrixKind::ALL.to_vec(),
            algos: vec![Algorithm::GapTv],
            seed: 0,
            c_const: crate::quantizer::DEFAULT_C_CONST,
            step_override: None,
            histogram_csr: 0.1,
            recon: ReconConfig::default(),
            record_timing: true,
        }
    }
}

impl BenchConfig {
    pub fn recon_for(&self, algo: Algorithm) -> ReconConfig {
        match algo {
            Algorithm::GapTv => ReconConfig { algorithm: algo, ..self.recon.clone() },
            Algorithm::Damp => ReconConfig {
                algorithm: algo,
                max_iters: self.recon.max_iters.min(ReconConfig::damp().max_iters),
                ..self.recon.clone()
            },
        }
    }

    fn encoder(&self, kind: MatrixKind, csr: f64) -> EncoderConfig {
        EncoderConfig {
            seed: self.seed,
            c_const: self.c_const,
            step_override: self.step_override,
            ..EncoderConfig::new(kind, csr)
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub rows: Vec<BenchRow>,
    pub histograms: Vec<CodewordHistogram>,
    /// One message per failed combination.
    pub failures: Vec<String>,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn sweep_image(id: &str, image: &ImagePlane, cfg: &BenchConfig) -> SweepResult {
    let mut out = SweepResult::default();
    for &kind in &cfg.matrices {
        for &csr in &cfg.csrs {
            let t = Instant::now();
            let enc = match encode(image, &cfg.encoder(kind, csr)) {
                Ok(e) => e,
                Err(e) => {
                    let msg = format!("{id} {kind} csr={csr}: encode failed: {e}");
                    log::warn!("{msg}");
                    out.failures.push(msg);
                    continue;
                }
            };
            let enc_ms = millis(t);
            for &algo in &cfg.algos {
                let t = Instant::now();
                let decoded = decode(&enc.bytes, &cfg.recon_for(algo));
                let dec_ms = millis(t);
                let row = decoded.and_then(|d| {
                    Ok(BenchRow {
                        image: id.to_string(),
                        matrix: kind,
                        algo,
                        csr,
                        step: enc.params().step,
                        bytes: enc.len(),
                        ssim: ssim(image, &d)?,
                        psnr: psnr(image, &d)?,
                        enc_ms: if cfg.record_timing { enc_ms } else { 0.0 },
                        dec_ms: if cfg.record_timing { dec_ms } else { 0.0 },
                    })
                });
                match row {
                    Ok(r) => out.rows.push(r),
                    Err(e) => {
                        let msg = format!("{id} {kind} csr={csr} {algo}: {e}");
                        log::warn!("{msg}");
                        out.failures.push(msg);
                    }
                }
            }
        }
        match encode(image, &cfg.encoder(kind, cfg.histogram_csr)) {
            Ok(enc) => out.histograms.push(CodewordHistogram::from_codewords(
                id,
                kind,
                cfg.histogram_csr,
                enc.params().l_max,
                &enc.payload.codewords,
            )),
            Err(e) => out.failures.push(format!("{id} {kind}: histogram encode failed: {e}")),
        }
    }
    out
}

/// Runs the full sweep. Images are processed in parallel; rows come back in
/// corpus order, then matrix, ratio and algorithm order.
pub fn run_sweep(corpus: &[(String, ImagePlane)], cfg: &BenchConfig) -> SweepResult {
    let parts = parallel::map(corpus, |(id, image)| sweep_image(id, image, cfg));
    let mut all = SweepResult::default();
    for p in parts {
        all.rows.extend(p.rows);
        all.histograms.extend(p.histograms);
        all.failures.extend(p.failures);
    }
    all
}

/// All `*.pgm` files in `dir`, sorted by name, keyed by file stem.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, ImagePlane)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((id, ImagePlane::load(&p)?))
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_rows<W: io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// SSIM at `bytes` by linear interpolation along a size/quality curve.
/// `None` outside the curve's size range.
pub fn ssim_at_size(curve: &[(usize, f64)], bytes: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|&(b, s)| (b as f64, s)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (pts.first()?, pts.last()?);
    if bytes < first.0 || bytes > last.0 {
        return None;
    }
    for w in pts.windows(2) {
        let ((b0, s0), (b1, s1)) = (w[0], w[1]);
        if bytes <= b1 {
            return Some(if b1 > b0 { s0 + (s1 - s0) * (bytes - b0) / (b1 - b0) } else { s0.max(s1) });
        }
    }
    Some(last.1)
}

/// Size/quality curve of one (image, matrix, algorithm) triple across ratios.
pub fn curve(rows: &[BenchRow], image: &str, matrix: MatrixKind, algo: Algorithm) -> Vec<(usize, f64)> {
    rows.iter()
        .filter(|r| r.image == image && r.matrix == matrix && r.algo == algo)
        .map(|r| (r.bytes, r.ssim))
        .collect()
}

/// A baseline point next to the codec's quality at the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineComparison {
    pub point: BaselinePoint,
    pub matrix: MatrixKind,
    pub algo: Algorithm,
    pub ssim_at_size: Option<f64>,
}

pub fn compare_baseline(rows: &[BenchRow], points: &[BaselinePoint]) -> Vec<BaselineComparison> {
    let mut combos: Vec<(MatrixKind, Algorithm)> = rows.iter().map(|r| (r.matrix, r.algo)).collect();
    combos.sort_by_key(|&(m, a)| (m.code(), a.name()));
    combos.dedup();
    points
        .iter()
        .flat_map(|p| {
            combos.iter().map(move |&(matrix, algo)| BaselineComparison {
                point: p.clone(),
                matrix,
                algo,
                ssim_at_size: ssim_at_size(&curve(rows, &p.image, matrix, algo), p.bytes as f64),
            })
        })
        .collect()
}

pub fn write_comparisons<W: io::Write>(items: &[BaselineComparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["image", "codec", "bytes", "ssim", "matrix", "algo", "csic_ssim"]).map_err(csv_err)?;
    for c in items {
        w.write_record([
            c.point.image.clone(),
            c.point.codec.clone(),
            c.point.bytes.to_string(),
            format!("{:.6}", c.point.ssim),
            c.matrix.name().to_string(),
            c.algo.name().to_string(),
            c.ssim_at_size.map_or_else(String::new, |s| format!("{s:.6}")),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// An external reference point (for instance a JPEG file of the same image).
#[derive(Clone, Debug, PartialEq)]
pub struct BaselinePoint {
    pub image: String,
    pub codec: String,
    pub bytes: usize,
    pub ssim: f64,
}

/// Reads a CSV with columns `image,bytes,ssim` and an optional `codec`
/// column, matched by header name.
pub fn read_baseline<R: io::Read>(input: R) -> Result<Vec<BaselinePoint>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (Some(ci), Some(cb), Some(cs)) = (col("image"), col("bytes"), col("ssim")) else {
        return Err(Error::Config("baseline CSV needs image, bytes and ssim columns".into()));
    };
    let cc = col("codec");
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let bad = |what: &str| Error::Config(format!("baseline row {}: bad {what}", line + 1));
        points.push(BaselinePoint {
            image: field(ci).to_string(),
            codec: cc.map(|i| field(i).to_string()).unwrap_or_else(|| "external".into()),
            bytes: field(cb).parse().map_err(|_| bad("bytes"))?,
            ssim: field(cs).parse().map_err(|_| bad("ssim"))?,
        });
    }
    Ok(points)
}
