use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use csic_core::codec::{self, DecoderConfig, EncoderConfig};
use csic_core::harness::{self, BenchConfig};
use csic_core::metrics;
use csic_core::recon::{Algorithm, DenoiserKind, ReconConfig};
use csic_core::{Error, ImagePlane, MatrixKind};

/// Compressive-sensing image codec.
#[derive(Parser)]
#[command(name = "csic", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a binary PGM into a .csic stream.
    Encode(EncodeArgs),
    /// Decode a .csic stream into a binary PGM.
    Decode(DecodeArgs),
    /// Compare two PGM images (SSIM, PSNR).
    Eval { original: PathBuf, decoded: PathBuf },
    /// Sweep a corpus and write a quality-versus-size CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value = "dct2d")]
    matrix: MatrixKind,
    #[arg(long, default_value_t = 0.1)]
    csr: f64,
    #[arg(long = "c-const", default_value_t = 2.0)]
    c_const: f64,
    #[arg(long = "step-override")]
    step_override: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave out the unclipped levels of saturated measurements.
    #[arg(long = "no-extras")]
    no_extras: bool,
}

#[derive(Args, Clone)]
struct ReconArgs {
    #[arg(long, default_value = "gaptv")]
    algo: Algorithm,
    /// Iteration cap (default 100 for GAP-TV, 30 for D-AMP).
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long = "tv-weight", default_value_t = 0.07 * 255.0)]
    tv_weight: f64,
    #[arg(long, default_value = "tv")]
    denoiser: DenoiserKind,
    #[arg(long = "rng-seed", default_value_t = 0)]
    rng_seed: u64,
}

impl ReconArgs {
    fn config(&self) -> ReconConfig {
        let base = match self.algo {
            Algorithm::GapTv => ReconConfig::default(),
            Algorithm::Damp => ReconConfig::damp(),
        };
        ReconConfig {
            max_iters: self.iters.unwrap_or(base.max_iters),
            tol: self.tol,
            tv_weight: self.tv_weight,
            denoiser: self.denoiser,
            rng_seed: self.rng_seed,
            ..base
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    recon: ReconArgs,
    /// Report SSIM and PSNR against this image.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = harness::REFERENCE_CSRS)]
    csrs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = MatrixKind::ALL)]
    matrices: Vec<MatrixKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [Algorithm::GapTv])]
    algos: Vec<Algorithm>,
    #[arg(long)]
    out: PathBuf,
    /// Directory for per (image, matrix) codeword histograms.
    #[arg(long = "hist-dir")]
    hist_dir: Option<PathBuf>,
    #[arg(long = "hist-csr", default_value_t = 0.1)]
    hist_csr: f64,
    /// External reference points (`image,bytes,ssim[,codec]`).
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "c-const", default_value_t = 2.0)]
    c_const: f64,
    #[arg(long = "step-override")]
    step_override: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long = "no-timing")]
    no_timing: bool,
}

fn read_image(path: &Path) -> anyhow::Result<ImagePlane> {
    ImagePlane::load(path).map_err(Error::from).with_context(|| format!("cannot read image {}", path.display()))
}

fn encode(a: &EncodeArgs) -> anyhow::Result<()> {
    let image = read_image(&a.input)?;
    let cfg = EncoderConfig {
        kind: a.matrix,
        csr: a.csr,
        c_const: a.c_const,
        step_override: a.step_override,
        seed: a.seed,
        transmit_extras: !a.no_extras,
        ..EncoderConfig::default()
    };
    let enc = codec::encode(&image, &cfg)?;
    fs::write(&a.output, &enc.bytes)
        .map_err(Error::from)
        .with_context(|| format!("cannot write {}", a.output.display()))?;
    let p = enc.params();
    println!(
        "{}: {} bytes ({:.4} bpp), {}x{} {} csr={} M={} step={:.4} L={} sections={} saturated={}",
        a.output.display(),
        enc.len(),
        8.0 * enc.len() as f64 / image.len() as f64,
        image.height(),
        image.width(),
        a.matrix,
        a.csr,
        enc.coded.header.m,
        p.step,
        p.l_max,
        enc.coded.sections.len(),
        enc.payload.saturated_count()
    );
    Ok(())
}

fn decode(a: &DecodeArgs) -> anyhow::Result<()> {
    let bytes =
        fs::read(&a.input).map_err(Error::from).with_context(|| format!("cannot read stream {}", a.input.display()))?;
    let cfg: DecoderConfig = a.recon.config();
    let image = codec::decode(&bytes, &cfg)?;
    image.save(&a.output).map_err(Error::from).with_context(|| format!("cannot write {}", a.output.display()))?;
    match &a.reference {
        Some(r) => {
            let original = read_image(r)?;
            println!(
                "{}: ssim={:.6} psnr={:.3}",
                a.output.display(),
                metrics::ssim(&original, &image).map_err(Error::from)?,
                metrics::psnr(&original, &image).map_err(Error::from)?
            );
        }
        None => println!("{}: {}x{} via {}", a.output.display(), image.height(), image.width(), cfg.algorithm),
    }
    Ok(())
}

fn eval(original: &Path, decoded: &Path) -> anyhow::Result<()> {
    let (a, b) = (read_image(original)?, read_image(decoded)?);
    println!(
        "ssim={:.6} psnr={:.3}",
        metrics::ssim(&a, &b).map_err(Error::from)?,
        metrics::psnr(&a, &b).map_err(Error::from)?
    );
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(Error::from).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn bench(a: &BenchArgs) -> anyhow::Result<()> {
    let corpus =
        harness::load_corpus(&a.corpus).with_context(|| format!("cannot load corpus {}", a.corpus.display()))?;
    let baseline = match &a.baseline {
        Some(p) => Some(
            harness::read_baseline(
                File::open(p).map_err(Error::from).with_context(|| format!("cannot read baseline {}", p.display()))?,
            )
            .with_context(|| format!("bad baseline {}", p.display()))?,
        ),
        None => None,
    };
    let defaults = ReconConfig::default();
    let cfg = BenchConfig {
        csrs: a.csrs.clone(),
        matrices: a.matrices.clone(),
        algos: a.algos.clone(),
        seed: a.seed,
        c_const: a.c_const,
        step_override: a.step_override,
        histogram_csr: a.hist_csr,
        recon: ReconConfig { max_iters: a.iters.unwrap_or(defaults.max_iters), ..defaults },
        record_timing: !a.no_timing,
    };
    log::info!("sweeping {} images", corpus.len());
    let result = harness::run_sweep(&corpus, &cfg);
    harness::write_rows(&result.rows, create(&a.out)?)?;
    if let Some(dir) = &a.hist_dir {
        fs::create_dir_all(dir).map_err(Error::from).with_context(|| format!("cannot create {}", dir.display()))?;
        for h in &result.histograms {
            h.write_csv(create(&dir.join(h.file_name()))?)?;
        }
    }
    if let Some(points) = baseline {
        let path = a.out.with_extension("baseline.csv");
        harness::write_comparisons(&harness::compare_baseline(&result.rows, &points), create(&path)?)?;
        println!("baseline comparison: {}", path.display());
    }
    for f in &result.failures {
        eprintln!("warning: {f}");
    }
    println!("{}: {} rows, {} failures", a.out.display(), result.rows.len(), result.failures.len());
    Ok(())
}

/// The context chain, skipping causes already quoted by an outer message.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if !msg.contains(&s) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&s);
        }
    }
    msg
}

fn exit_code(e: &anyhow::Error) -> u8 {
    e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or(2, |e| e.exit_code()) as u8
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Eval { original, decoded } => eval(original, decoded),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
