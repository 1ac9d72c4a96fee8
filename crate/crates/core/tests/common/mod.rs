#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sacsp_core::linalg::RealMatrix;
use sacsp_core::{ClassId, Epoch, EpochSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> RealMatrix {
    gaussian_matrix(rng, n, n).symmetrized()
}

/// `G·Gᵀ + n·I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> RealMatrix {
    let g = gaussian_matrix(rng, n, n);
    g.matmul(&g.transpose()).add(&RealMatrix::identity(n).scale(n as f64)).symmetrized()
}

/// Random nonnegative, mirror-symmetric weights with unit norm.
pub fn random_weights(rng: &mut ChaCha8Rng, t: usize) -> Vec<f64> {
    let mut h = vec![0.0; t];
    for k in 0..=t / 2 {
        let v: f64 = rng.gen();
        h[k] = v;
        h[(t - k) % t] = v;
    }
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    h.iter().map(|x| x / norm).collect()
}

/// Gaussian epochs with per-class channel scalings, alternating labels.
pub fn random_set(seed: u64, n: usize, t: usize, per_class: usize) -> EpochSet {
    let mut r = rng(seed);
    let scale: [Vec<f64>; 2] = [
        (0..n).map(|_| 0.5 + r.gen::<f64>() * 2.0).collect(),
        (0..n).map(|_| 0.5 + r.gen::<f64>() * 2.0).collect(),
    ];
    let mix = gaussian_matrix(&mut r, n, n);
    let epochs = (0..2 * per_class)
        .map(|i| {
            let label = if i % 2 == 0 { ClassId::One } else { ClassId::Two };
            let raw = RealMatrix::from_fn(n, t, |c, _| scale[label.index()][c] * r.sample::<f64, _>(StandardNormal));
            Epoch {
                data: mix.matmul(&raw),
                label,
                fs: 100.0,
            }
        })
        .collect();
    EpochSet::new(epochs).unwrap()
}

pub fn rel_err(a: &RealMatrix, b: &RealMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
