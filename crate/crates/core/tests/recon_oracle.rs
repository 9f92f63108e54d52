mod common;

use common::*;
use csic_core::codec::{decode, encode, EncoderConfig};
use csic_core::recon::{
    mc_divergence, project_consistent, zero_saturated_rows, Denoiser, GaussianDenoiser, ReconConfig,
};
use csic_core::sensing::LinearOperator;
use csic_core::{ImagePlane, MatrixKind, SensingOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn masked_operator_matches_d_phi() {
    let mut r = rng(3);
    for kind in MatrixKind::ALL {
        let op = SensingOperator::new(kind, 8, 8, 24, 11).unwrap();
        let mask: Vec<bool> = (0..24).map(|_| r.gen_bool(0.3)).collect();
        let masked = zero_saturated_rows(&op, &mask).unwrap();
        let dphi: Matrix =
            dense_phi(&op).into_iter().zip(&mask).map(|(row, &m)| if m { vec![0.0; row.len()] } else { row }).collect();
        let x: Vec<f64> = (0..64).map(|_| r.gen_range(0.0..255.0)).collect();
        let z: Vec<f64> = (0..24).map(|_| r.gen_range(-5.0..5.0)).collect();
        assert!(rel_err(&masked.apply(&x).unwrap(), &matvec(&dphi, &x)) < 1e-12, "{kind}");
        assert!(rel_err(&masked.apply_transpose(&z).unwrap(), &matvec_t(&dphi, &z)) < 1e-12, "{kind}");
    }
}

#[test]
fn projection_is_consistent_for_every_kind() {
    let mut r = rng(8);
    for kind in MatrixKind::ALL {
        let op = SensingOperator::new(kind, 24, 20, 150, 5).unwrap();
        let y: Vec<f64> = (0..150).map(|_| r.gen_range(-300.0..300.0)).collect();
        let theta: Vec<f64> = (0..op.signal_len()).map(|_| r.gen_range(0.0..255.0)).collect();
        let x = project_consistent(&theta, &op, &y).unwrap();
        let back = op.apply(&x).unwrap();
        let worst = back.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{kind}: {worst}");
    }
}

/// `sum_i dD_i/dv_i` by central differences along every coordinate.
fn finite_difference_divergence(d: &dyn Denoiser, v: &[f64], grid: (usize, usize), sigma: f64) -> f64 {
    let h = 1e-4;
    (0..v.len())
        .map(|i| {
            let (mut up, mut down) = (v.to_vec(), v.to_vec());
            up[i] += h;
            down[i] -= h;
            (d.denoise(&up, grid, sigma)[i] - d.denoise(&down, grid, sigma)[i]) / (2.0 * h)
        })
        .sum()
}

#[test]
fn gaussian_divergence_probe_is_unbiased() {
    let mut r = rng(13);
    let v: Vec<f64> = (0..64).map(|_| r.gen_range(0.0..255.0)).collect();
    let d = GaussianDenoiser::default();
    for sigma in [4.0, 12.0, 30.0] {
        let exact = finite_difference_divergence(&d, &v, (8, 8), sigma);
        let base = d.denoise(&v, (8, 8), sigma);
        let mean = (0..32u64)
            .map(|seed| mc_divergence(&d, &v, &base, (8, 8), sigma, 1e-3, &mut ChaCha8Rng::seed_from_u64(seed)))
            .sum::<f64>()
            / 32.0;
        assert!(((mean - exact) / exact).abs() <= 0.1, "sigma {sigma}: {mean} vs {exact}");
    }
}

#[test]
fn reconstruction_ignores_thread_count() {
    let img = ImagePlane::from_fn(64, 48, |r, c| ((r * 3 + c * 5) % 120 + if r > 30 { 90 } else { 0 }) as u8).unwrap();
    for (kind, cfg) in [(MatrixKind::SrmWht, ReconConfig::default()), (MatrixKind::Dct2d, ReconConfig::damp())] {
        let bytes = encode(&img, &EncoderConfig::new(kind, 0.2)).unwrap().bytes;
        let cfg = ReconConfig { max_iters: 20, ..cfg };
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| decode(&bytes, &cfg).unwrap());
        let b = wide.install(|| decode(&bytes, &cfg).unwrap());
        assert_eq!(a, b, "{kind}");
    }
}
