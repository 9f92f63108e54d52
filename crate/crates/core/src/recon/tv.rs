//! Anisotropic total variation on a column-major canvas.
//!
//! `D_v` and `D_h` are forward differences down a column and along a row,
//! zero at the last row and column. The denoiser solves
//! `min_t 1/2 |v - t|^2 + w (|D_v t|_1 + |D_h t|_1)` through its dual
//! `min_{|p| <= 1} 1/2 |v - w D^T p|^2` by projected gradient with step 1/8.

use crate::parallel;

pub const DEFAULT_INNER_ITERS: usize = 20;

const BLOCK: usize = 4096;

pub fn tv_norm(x: &[f64], rows: usize, cols: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..cols {
        for r in 0..rows {
            let i = c * rows + r;
            if r + 1 < rows {
                s += (x[i + 1] - x[i]).abs();
            }
            if c + 1 < cols {
                s += (x[i + rows] - x[i]).abs();
            }
        }
    }
    s
}

fn columns_per_block(rows: usize) -> usize {
    (BLOCK / rows.max(1)).max(1)
}

/// `out = a * v - D^T p` with `p[i] = [p_v, p_h]`.
fn residual(v: &[f64], a: f64, p: &[[f64; 2]], rows: usize, out: &mut [f64]) {
    let cpb = columns_per_block(rows);
    parallel::for_each_chunk_mut(
        out,
        cpb * rows,
        || (),
        |_, block, chunk| {
            let base = block * cpb * rows;
            for (k, o) in chunk.iter_mut().enumerate() {
                let i = base + k;
                let r = i % rows;
                // D^T p = -(backward divergence of p)
                let mut dtp = -p[i][0] - p[i][1];
                if r > 0 {
                    dtp += p[i - 1][0];
                }
                if i >= rows {
                    dtp += p[i - rows][1];
                }
                *o = a * v[i] - dtp;
            }
        },
    );
}

fn dual_step(u: &[f64], p: &mut [[f64; 2]], rows: usize, cols: usize, tau: f64) {
    let cpb = columns_per_block(rows);
    let n = rows * cols;
    parallel::for_each_chunk_mut(
        p,
        cpb * rows,
        || (),
        |_, block, chunk| {
            let base = block * cpb * rows;
            for (k, q) in chunk.iter_mut().enumerate() {
                let i = base + k;
                let r = i % rows;
                if r + 1 < rows {
                    q[0] = (q[0] + tau * (u[i + 1] - u[i])).clamp(-1.0, 1.0);
                }
                if i + rows < n {
                    q[1] = (q[1] + tau * (u[i + rows] - u[i])).clamp(-1.0, 1.0);
                }
            }
        },
    );
}

/// Result of [`tv_denoise_traced`].
#[derive(Clone, Debug)]
pub struct TvOutcome {
    pub image: Vec<f64>,
    /// Dual objective `1/2 |v - w D^T p|^2` after each inner iteration.
    pub dual_objective: Vec<f64>,
}

pub fn tv_denoise(v: &[f64], rows: usize, cols: usize, weight: f64, iters: usize) -> Vec<f64> {
    tv_denoise_traced(v, rows, cols, weight, iters, false).image
}

pub fn tv_denoise_traced(v: &[f64], rows: usize, cols: usize, weight: f64, iters: usize, trace: bool) -> TvOutcome {
    assert_eq!(v.len(), rows * cols, "signal does not match the canvas");
    if !(weight > 0.0) || v.is_empty() {
        return TvOutcome { image: v.to_vec(), dual_objective: Vec::new() };
    }
    let mut p = vec![[0.0f64; 2]; v.len()];
    let mut u = vec![0.0; v.len()];
    let mut dual_objective = Vec::new();
    let inv = 1.0 / weight;
    for _ in 0..iters {
        residual(v, inv, &p, rows, &mut u);
        dual_step(&u, &mut p, rows, cols, 0.125);
        if trace {
            residual(v, inv, &p, rows, &mut u);
            dual_objective.push(0.5 * weight * weight * u.iter().map(|x| x * x).sum::<f64>());
        }
    }
    residual(v, inv, &p, rows, &mut u);
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let image = u.iter().map(|&x| (weight * x).clamp(lo, hi)).collect();
    TvOutcome { image, dual_objective }
}
