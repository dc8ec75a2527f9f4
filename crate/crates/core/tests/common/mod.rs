//! Independent reference samplers used as test oracles.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use tsam::linalg::cholesky;
use tsam::targets::{BananaTarget, ShiftedTTarget, TwoLevelTarget};

fn normals<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn lower_times(l: &tsam::linalg::Matrix, z: &[f64]) -> Vec<f64> {
    (0..z.len())
        .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
        .collect()
}

/// I.i.d. draws from the truncated shifted t, by rejection from the
/// untruncated distribution `mu + L z / sqrt(w/ν)`.
pub fn truncated_t_draws(target: &ShiftedTTarget, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = target.dim();
    let l = cholesky(target.shape()).unwrap().lower().clone();
    let chi = ChiSquared::new(target.nu()).unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = normals(&mut rng, d);
        let w: f64 = chi.sample(&mut rng);
        let s = (w / target.nu()).sqrt();
        let lz = lower_times(&l, &z);
        let x: Vec<f64> = target
            .location()
            .iter()
            .zip(&lz)
            .map(|(m, v)| m + v / s)
            .collect();
        if target.support().contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Exact draws from the untruncated twisted Gaussian: `φ⁻¹(y)` with `y ~ N(mu, Σ)`.
pub fn twisted_gaussian_draws(target: &BananaTarget, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = target.dim();
    let l = target.covariance_factor().lower().clone();
    let twist = target.twist();
    (0..n)
        .map(|_| {
            let y: Vec<f64> = target
                .mean()
                .iter()
                .zip(lower_times(&l, &normals(&mut rng, d)))
                .map(|(m, v)| m + v)
                .collect();
            twist.inverse(&y)
        })
        .collect()
}

/// `10·exp(−0.1·Σx)`.
pub fn exp_sum(x: &[f64]) -> f64 {
    10.0 * (-0.1 * x.iter().sum::<f64>()).exp()
}
