//! Discretely observed sample paths.
//!
//! [`simulate_linear`] runs Euler–Maruyama on a fine grid for
//! `dX = −b_θ(X)dt + dW` and keeps every `m`-th state. The Ornstein–Uhlenbeck
//! routines in [`ou`] sample transitions exactly.

pub mod io;
pub mod ou;

pub use ou::{
    ou_spectral_constants, simulate_ou_exact, stationary_covariance, transition_covariance,
    OUModel,
};

use crate::error::{check_len, Error, Result};
use crate::model::{DriftBasis, SparseParam};
use crate::rng;

pub const BLOW_UP: f64 = 1e8;

/// Observations `X_{t_0}, …, X_{t_n}` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<f64>,
    d: usize,
    delta_n: f64,
    seed: u64,
}

impl Trajectory {
    pub fn new(states: Vec<f64>, d: usize, delta_n: f64, seed: u64) -> Result<Self> {
        if d == 0 || states.len() % d != 0 || states.is_empty() {
            return Err(Error::InvalidInput(format!(
                "state buffer of length {} is not a nonempty multiple of d = {d}",
                states.len()
            )));
        }
        if !(delta_n > 0.0 && delta_n.is_finite()) {
            return Err(Error::InvalidInput(format!("step must be positive, got {delta_n}")));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trajectory has non-finite states".into()));
        }
        Ok(Self {
            states,
            d,
            delta_n,
            seed,
        })
    }

    /// Number of increments `n`.
    pub fn n(&self) -> usize {
        self.states.len() / self.d - 1
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    pub fn horizon(&self) -> f64 {
        self.n() as f64 * self.delta_n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.d..(i + 1) * self.d]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Sub-path of observations `from..=to`, keeping the step.
    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.n() {
            return Err(Error::InvalidInput(format!(
                "window {from}..={to} outside 0..={}",
                self.n()
            )));
        }
        Self::new(
            self.states[from * self.d..(to + 1) * self.d].to_vec(),
            self.d,
            self.delta_n,
            self.seed,
        )
    }
}

/// Brownian increments and fine sub-paths recorded alongside a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    /// `n × d`, row `i` is `W_{t_{i+1}} − W_{t_i}`.
    pub coarse_dw: Option<Vec<f64>>,
    /// `n × (m+1) × d`, block `i` holds the fine states from `X_{t_i}` to `X_{t_{i+1}}`.
    pub fine_states: Option<Vec<f64>>,
    /// `n × m × d` fine increments, kept with `coarse_dw` for consistency checks.
    pub fine_dw: Option<Vec<f64>>,
    pub substeps: usize,
    pub d: usize,
}

impl NoiseRecord {
    pub fn coarse(&self, i: usize) -> Option<&[f64]> {
        self.coarse_dw
            .as_ref()
            .map(|w| &w[i * self.d..(i + 1) * self.d])
    }

    /// Fine state `k` (0..=m) inside interval `i`.
    pub fn fine_state(&self, i: usize, k: usize) -> Option<&[f64]> {
        let m1 = self.substeps + 1;
        let d = self.d;
        self.fine_states
            .as_ref()
            .map(|f| &f[(i * m1 + k) * d..(i * m1 + k + 1) * d])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Record {
    pub noise: bool,
    pub fine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub delta_n: f64,
    pub substeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub record: Record,
}

impl SimulationConfig {
    /// Ten substeps, burn-in of `⌈0.1·n⌉` observation intervals, start at zero.
    pub fn new(n: usize, delta_n: f64, seed: u64) -> Self {
        Self {
            n,
            delta_n,
            substeps: 10,
            burn_in: n.div_ceil(10),
            seed,
            x0: None,
            record: Record::default(),
        }
    }

    pub fn with_substeps(mut self, m: usize) -> Self {
        self.substeps = m;
        self
    }

    pub fn with_burn_in(mut self, b: usize) -> Self {
        self.burn_in = b;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn recording(mut self, record: Record) -> Self {
        self.record = record;
        self
    }
}

struct Stepper<'a> {
    basis: &'a DriftBasis,
    theta: &'a [f64],
    delta: f64,
    drift: Vec<f64>,
}

impl Stepper<'_> {
    /// One Euler step `x ← x − b(x)·δ + dw`. Returns false on blow-up.
    fn step(&mut self, x: &mut [f64], dw: &[f64]) -> bool {
        self.basis.drift_into(self.theta, x, &mut self.drift);
        let mut ok = true;
        for ((xi, bi), wi) in x.iter_mut().zip(&self.drift).zip(dw) {
            *xi += -bi * self.delta + wi;
            ok &= xi.is_finite() && xi.abs() <= BLOW_UP;
        }
        ok
    }
}

fn check_common(basis: &DriftBasis, theta: &SparseParam, delta_n: f64, m: usize) -> Result<()> {
    check_len("parameter length", basis.p(), theta.len())?;
    if m == 0 {
        return Err(Error::InvalidInput("substeps must be at least 1".into()));
    }
    if !(delta_n > 0.0 && delta_n.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {delta_n}")));
    }
    Ok(())
}

/// Euler–Maruyama at fine step `Δₙ/m`, observed every `m` substeps.
pub fn simulate_linear(
    basis: &DriftBasis,
    theta0: &SparseParam,
    cfg: &SimulationConfig,
) -> Result<(Trajectory, Option<NoiseRecord>)> {
    let d = basis.d();
    let m = cfg.substeps;
    check_common(basis, theta0, cfg.delta_n, m)?;
    if cfg.n == 0 {
        return Err(Error::InvalidInput("need at least one increment".into()));
    }
    let mut x = match &cfg.x0 {
        Some(x0) => {
            check_len("initial state", d, x0.len())?;
            x0.clone()
        }
        None => vec![0.0; d],
    };
    let delta = cfg.delta_n / m as f64;
    let sd = delta.sqrt();
    let mut stepper = Stepper {
        basis,
        theta: theta0.values(),
        delta,
        drift: vec![0.0; d],
    };
    let mut rng = rng::rng(cfg.seed);
    let mut dw = vec![0.0; d];

    for i in 0..cfg.burn_in {
        for _ in 0..m {
            rng::fill_normal(&mut rng, &mut dw);
            dw.iter_mut().for_each(|v| *v *= sd);
            if !stepper.step(&mut x, &dw) {
                return Err(Error::SimulationDiverged { step: i });
            }
        }
    }

    let rec = cfg.record;
    let mut states = Vec::with_capacity((cfg.n + 1) * d);
    states.extend_from_slice(&x);
    let mut coarse = rec.noise.then(|| Vec::with_capacity(cfg.n * d));
    let mut fine_dw = rec.noise.then(|| Vec::with_capacity(cfg.n * m * d));
    let mut fine = rec.fine.then(|| Vec::with_capacity(cfg.n * (m + 1) * d));
    let mut acc = vec![0.0; d];

    for i in 0..cfg.n {
        if let Some(f) = fine.as_mut() {
            f.extend_from_slice(&x);
        }
        acc.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..m {
            rng::fill_normal(&mut rng, &mut dw);
            dw.iter_mut().for_each(|v| *v *= sd);
            if !stepper.step(&mut x, &dw) {
                return Err(Error::SimulationDiverged {
                    step: cfg.burn_in + i,
                });
            }
            if let Some(f) = fine.as_mut() {
                f.extend_from_slice(&x);
            }
            if let Some(fw) = fine_dw.as_mut() {
                fw.extend_from_slice(&dw);
            }
            acc.iter_mut().zip(&dw).for_each(|(a, w)| *a += w);
        }
        if let Some(c) = coarse.as_mut() {
            c.extend_from_slice(&acc);
        }
        states.extend_from_slice(&x);
    }

    let traj = Trajectory::new(states, d, cfg.delta_n, cfg.seed)?;
    let record = (rec.noise || rec.fine).then(|| NoiseRecord {
        coarse_dw: coarse,
        fine_states: fine,
        fine_dw,
        substeps: m,
        d,
    });
    Ok((traj, record))
}

/// Euler–Maruyama driven by caller-supplied fine increments (`n·m·d` values,
/// interval-major). Returns the observed path and the fine sub-paths.
pub fn integrate_euler(
    basis: &DriftBasis,
    theta: &SparseParam,
    x0: &[f64],
    delta_n: f64,
    m: usize,
    fine_dw: &[f64],
) -> Result<(Trajectory, NoiseRecord)> {
    let d = basis.d();
    check_common(basis, theta, delta_n, m)?;
    check_len("initial state", d, x0.len())?;
    if fine_dw.is_empty() || fine_dw.len() % (m * d) != 0 {
        return Err(Error::InvalidInput(
            "increment buffer must hold a positive multiple of m·d values".into(),
        ));
    }
    let n = fine_dw.len() / (m * d);
    let mut stepper = Stepper {
        basis,
        theta: theta.values(),
        delta: delta_n / m as f64,
        drift: vec![0.0; d],
    };
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity((n + 1) * d);
    let mut fine = Vec::with_capacity(n * (m + 1) * d);
    let mut coarse = vec![0.0; n * d];
    states.extend_from_slice(&x);
    for i in 0..n {
        fine.extend_from_slice(&x);
        for k in 0..m {
            let dw = &fine_dw[(i * m + k) * d..(i * m + k + 1) * d];
            if !stepper.step(&mut x, dw) {
                return Err(Error::SimulationDiverged { step: i });
            }
            fine.extend_from_slice(&x);
            coarse[i * d..(i + 1) * d]
                .iter_mut()
                .zip(dw)
                .for_each(|(a, w)| *a += w);
        }
        states.extend_from_slice(&x);
    }
    let traj = Trajectory::new(states, d, delta_n, 0)?;
    Ok((
        traj,
        NoiseRecord {
            coarse_dw: Some(coarse),
            fine_states: Some(fine),
            fine_dw: Some(fine_dw.to_vec()),
            substeps: m,
            d,
        },
    ))
}
