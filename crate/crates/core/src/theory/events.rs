//! Statistics behind the martingale, approximation and compatibility sets.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::estimate::build_gram;
use crate::model::{cone_membership, DriftBasis, SparseParam};
use crate::rng;
use crate::simulate::{NoiseRecord, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventStatistics {
    /// `‖(1/n)·Σ Φᵀ ΔW_i‖∞`.
    pub stat_t: f64,
    /// `‖(1/n)·Σ Φᵀ ∫(b(X_s) − b(X_{t_{i−1}}))ds‖∞`, left-endpoint quadrature.
    pub stat_tp: f64,
    /// Upper bound on the cone infimum of `‖b_θ − b_υ‖_D / ‖θ − υ‖₂`.
    pub k_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventFlags {
    pub holds_t: bool,
    pub holds_tp: bool,
    pub holds_tpp: bool,
}

impl EventStatistics {
    pub fn flags(&self, lambda: f64, k: f64) -> EventFlags {
        EventFlags {
            holds_t: self.stat_t <= lambda / 4.0,
            holds_tp: self.stat_tp <= lambda / 4.0,
            holds_tpp: self.k_hat >= k,
        }
    }
}

/// Martingale statistic from recorded coarse increments.
pub fn martingale_statistic(
    traj: &Trajectory,
    noise: &NoiseRecord,
    basis: &DriftBasis,
) -> Result<f64> {
    let dw = noise
        .coarse_dw
        .as_ref()
        .ok_or(Error::InstrumentationRequired("coarse Brownian increments"))?;
    let (d, p, n) = (basis.d(), basis.p(), traj.n());
    check_len("trajectory dimension", d, traj.d())?;
    check_len("noise record length", n * d, dw.len())?;
    let mut phi0 = vec![0.0; d];
    let mut phi = vec![0.0; d * p];
    let mut acc = vec![0.0; p];
    for i in 0..n {
        basis.eval_features(traj.state(i), &mut phi0, &mut phi);
        let w = &dw[i * d..(i + 1) * d];
        for (j, col) in phi.chunks_exact(d).enumerate() {
            acc[j] += col.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(acc.iter().fold(0.0_f64, |m, v| m.max((v / n as f64).abs())))
}

/// Discretization statistic from recorded fine sub-paths.
pub fn approximation_statistic(
    traj: &Trajectory,
    noise: &NoiseRecord,
    basis: &DriftBasis,
    theta0: &SparseParam,
) -> Result<f64> {
    if noise.fine_states.is_none() {
        return Err(Error::InstrumentationRequired("fine sub-path states"));
    }
    let (d, p, n, m) = (basis.d(), basis.p(), traj.n(), noise.substeps);
    check_len("trajectory dimension", d, traj.d())?;
    check_len("parameter length", p, theta0.len())?;
    let fine_len = noise.fine_states.as_ref().map_or(0, Vec::len);
    check_len("fine record length", n * (m + 1) * d, fine_len)?;
    let delta = traj.delta_n() / m as f64;
    let theta = theta0.values();
    let mut phi0 = vec![0.0; d];
    let mut phi = vec![0.0; d * p];
    let mut b_left = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut integral = vec![0.0; d];
    let mut acc = vec![0.0; p];
    for i in 0..n {
        let x_left = noise.fine_state(i, 0).unwrap_or(&[]);
        basis.drift_into(theta, x_left, &mut b_left);
        integral.iter_mut().for_each(|v| *v = 0.0);
        for k in 1..m {
            let xs = noise.fine_state(i, k).unwrap_or(&[]);
            basis.drift_into(theta, xs, &mut b);
            for c in 0..d {
                integral[c] += delta * (b[c] - b_left[c]);
            }
        }
        basis.eval_features(traj.state(i), &mut phi0, &mut phi);
        for (j, col) in phi.chunks_exact(d).enumerate() {
            acc[j] += col.iter().zip(&integral).map(|(a, v)| a * v).sum::<f64>();
        }
    }
    Ok(acc.iter().fold(0.0_f64, |m, v| m.max((v / n as f64).abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityBound {
    pub k_hat: f64,
    /// Whether every support of the target size was enumerated.
    pub exhaustive_supports: bool,
    pub supports_checked: usize,
    pub directions_sampled: usize,
    /// Smallest Rayleigh quotient among sampled cone directions.
    pub min_sampled_quotient: f64,
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn rayleigh(g: &DMatrix<f64>, u: &[f64]) -> f64 {
    let p = u.len();
    let mut num = 0.0;
    for a in 0..p {
        if u[a] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for b in 0..p {
            row += g[(a, b)] * u[b];
        }
        num += u[a] * row;
    }
    num / u.iter().map(|v| v * v).sum::<f64>()
}

/// Upper bound on `inf_{u ∈ 𝒞(s, 3+4/γ)} √(uᵀGu/‖u‖²)`: minimum restricted
/// eigenvalue over all supports of size `min(2s, p)` when there are at most
/// `budget` of them, and over `budget` sampled cone directions.
pub fn compatibility_bound(
    gram: &DMatrix<f64>,
    s: usize,
    gamma: f64,
    budget: usize,
    seed: u64,
) -> Result<CompatibilityBound> {
    let p = gram.nrows();
    if !(gamma > 0.0) || p == 0 {
        return Err(Error::InvalidInput("need γ > 0 and a nonempty Gram matrix".into()));
    }
    let s = s.clamp(1, p);
    let c = 3.0 + 4.0 / gamma;
    let mut best = f64::INFINITY;

    let q = (2 * s).min(p);
    let exhaustive = ln_binomial(p, q) <= (budget.max(1) as f64).ln();
    let mut supports = 0;
    if exhaustive {
        let mut idx: Vec<usize> = (0..q).collect();
        loop {
            let sub = DMatrix::from_fn(q, q, |a, b| gram[(idx[a], idx[b])]);
            let ev = sub.symmetric_eigen().eigenvalues;
            best = best.min(ev.iter().copied().fold(f64::INFINITY, f64::min));
            supports += 1;
            if !next_combination(&mut idx, p) {
                break;
            }
        }
    }

    let mut rng = rng::rng(seed);
    let mut sampled = 0;
    let mut min_sampled = f64::INFINITY;
    let mut attempts = 0;
    let mut u = vec![0.0; p];
    while sampled < budget && attempts < 20 * budget.max(1) {
        attempts += 1;
        let support = sample(&mut rng, p, s);
        let tail_scale = rng.random::<f64>() * c / p as f64;
        for v in u.iter_mut() {
            *v = tail_scale * rng::normal(&mut rng);
        }
        for j in support.iter() {
            u[j] = rng::normal(&mut rng);
        }
        if u.iter().all(|v| *v == 0.0) || !cone_membership(&u, s, c)? {
            continue;
        }
        let rq = rayleigh(gram, &u);
        min_sampled = min_sampled.min(rq);
        sampled += 1;
    }
    best = best.min(min_sampled);
    Ok(CompatibilityBound {
        k_hat: best.max(0.0).sqrt(),
        exhaustive_supports: exhaustive,
        supports_checked: supports,
        directions_sampled: sampled,
        min_sampled_quotient: min_sampled,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn event_statistics(
    traj: &Trajectory,
    noise: &NoiseRecord,
    basis: &DriftBasis,
    theta0: &SparseParam,
    s: usize,
    gamma: f64,
    budget: usize,
    seed: u64,
) -> Result<EventStatistics> {
    let stat_t = martingale_statistic(traj, noise, basis)?;
    let stat_tp = approximation_statistic(traj, noise, basis, theta0)?;
    let gram = build_gram(traj, basis)?;
    let k_hat = compatibility_bound(&gram.gram, s, gamma, budget, seed)?.k_hat;
    Ok(EventStatistics {
        stat_t,
        stat_tp,
        k_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CustomField;
    use crate::simulate::{simulate_linear, Record, SimulationConfig};

    #[test]
    fn zero_drift_has_no_discretization_term() {
        let basis = DriftBasis::custom(2, CustomField::zero(), vec![CustomField::zero()]).unwrap();
        let theta = SparseParam::zeros(1);
        let cfg = SimulationConfig::new(20, 0.1, 4).recording(Record {
            noise: true,
            fine: true,
        });
        let (traj, rec) = simulate_linear(&basis, &theta, &cfg).unwrap();
        let rec = rec.unwrap();
        assert_eq!(approximation_statistic(&traj, &rec, &basis, &theta).unwrap(), 0.0);
    }

    #[test]
    fn zero_noise_gives_zero_martingale_term() {
        let basis = DriftBasis::cosine(2, 3, 1.0).unwrap();
        let traj = Trajectory::new(vec![0.3; 2 * 11], 2, 0.1, 0).unwrap();
        let rec = NoiseRecord {
            coarse_dw: Some(vec![0.0; 20]),
            fine_states: None,
            fine_dw: None,
            substeps: 1,
            d: 2,
        };
        assert_eq!(martingale_statistic(&traj, &rec, &basis).unwrap(), 0.0);
        assert!(matches!(
            approximation_statistic(&traj, &rec, &basis, &SparseParam::zeros(3)),
            Err(Error::InstrumentationRequired(_))
        ));
    }

    #[test]
    fn exhaustive_supports_on_identity() {
        let g = DMatrix::<f64>::identity(4, 4);
        let b = compatibility_bound(&g, 1, 1.0, 100, 1).unwrap();
        assert!(b.exhaustive_supports);
        assert_eq!(b.supports_checked, 6);
        assert!((b.k_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combination_enumeration_count() {
        let mut idx = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut idx, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
        assert!((ln_binomial(6, 3) - 20f64.ln()).abs() < 1e-12);
    }
}
