#![allow(dead_code)]

use drift_lasso::estimate::{build_gram, GramSystem};
use drift_lasso::{DriftBasis, Trajectory};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian random walk with `n` increments in `d` dimensions.
pub fn random_walk(seed: u64, n: usize, d: usize, dt: f64) -> Trajectory {
    let mut r = rng(seed);
    let mut x = vec![0.0; d];
    let mut states = x.clone();
    for _ in 0..n {
        for v in x.iter_mut() {
            *v += dt.sqrt() * gauss(&mut r);
        }
        states.extend_from_slice(&x);
    }
    Trajectory::new(states, d, dt, seed).unwrap()
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample::<f64, _>(rand_distr::StandardNormal)
}

/// Gram system of a cosine basis along a random walk.
pub fn random_system(seed: u64, p: usize, n: usize) -> GramSystem {
    let traj = random_walk(seed, n, 2, 0.1);
    let basis = DriftBasis::cosine(2, p, 1.0).unwrap();
    build_gram(&traj, &basis).unwrap()
}

/// A random stable matrix `−(B − (ρ+margin)·I)` style: shift so the spectrum
/// has real parts at least `margin`.
pub fn random_stable(seed: u64, d: usize, margin: f64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let b = DMatrix::from_fn(d, d, |_, _| gauss(&mut r) / (d as f64).sqrt());
    let eig = b.complex_eigenvalues();
    let shift = eig.iter().fold(f64::NEG_INFINITY, |m, z| m.max(-z.re));
    &b + DMatrix::identity(d, d) * (shift + margin)
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}
