//! Acceptance run: one PASS/FAIL line per criterion.

use std::path::Path;
use std::time::Instant;

use drift_lasso::estimate::{
    brute_force_lasso, build_gram, lasso_ou, lasso_path, lasso_solve, log_grid, mle_solve,
    kkt_residual, GramSystem, LassoConfig,
};
use drift_lasso::rng;
use drift_lasso::simulate::{simulate_ou_exact, stationary_covariance, transition_covariance};
use drift_lasso::theory::constants::h0_raw;
use drift_lasso::{DriftBasis, Trajectory};
use drift_lasso_cli::config::ExperimentConfig;
use drift_lasso_cli::experiments::{dimension_sweep, rate_study, support_recovery, verify};
use drift_lasso_cli::output::OutputDir;
use drift_lasso_cli::{execute, load_config, Command, Invocation};
use nalgebra::DMatrix;
use rand::Rng;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, what: &str, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{id:<5} {} {what}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn random_walk(seed: u64, n: usize, d: usize, dt: f64) -> Trajectory {
    let mut r = rng::rng(seed);
    let mut x = vec![0.0; d];
    let mut states = x.clone();
    for _ in 0..n {
        for v in x.iter_mut() {
            *v += dt.sqrt() * rng::normal(&mut r);
        }
        states.extend_from_slice(&x);
    }
    Trajectory::new(states, d, dt, seed).unwrap()
}

fn random_system(seed: u64, p: usize, n: usize) -> GramSystem {
    let traj = random_walk(seed, n, 2, 0.1);
    build_gram(&traj, &DriftBasis::cosine(2, p, 1.0).unwrap()).unwrap()
}

fn random_stable(seed: u64, d: usize, margin: f64) -> DMatrix<f64> {
    let mut r = rng::rng(seed);
    let b = DMatrix::from_fn(d, d, |_, _| rng::normal(&mut r) / (d as f64).sqrt());
    let shift = b.complex_eigenvalues().iter().fold(f64::NEG_INFINITY, |m, z| m.max(-z.re));
    &b + DMatrix::identity(d, d) * (shift + margin)
}

fn simpson_covariance(a: &DMatrix<f64>, t: f64, panels: usize) -> DMatrix<f64> {
    let d = a.nrows();
    let h = t / panels as f64;
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for k in 0..=panels {
        let w = match k {
            0 => 1.0,
            k if k == panels => 1.0,
            k if k % 2 == 1 => 4.0,
            _ => 2.0,
        };
        let e = (-a * (k as f64 * h)).exp();
        acc += &e * e.transpose() * w;
    }
    acc * (h / 3.0)
}

fn kkt_ok(sys: &GramSystem, theta: &[f64], lambda: f64, cfg: &LassoConfig) -> bool {
    kkt_residual(sys, theta, lambda, &vec![false; theta.len()]) <= cfg.kkt_bound(sys.linear_sup())
}

/// Solver correctness, KKT certification and the ℓ₁ path.
fn solver(rep: &mut Report) {
    let cfg = LassoConfig::default();
    let mut certified = 0;
    let mut converged = 0;

    let clock = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..200u64 {
        let p = 1 + (k as usize % 3);
        let sys = random_system(k, p, 50);
        let lambda = rng::rng(10_000 + k).random_range(0.0..1.0) * sys.linear_sup();
        let cd = lasso_solve(&sys, lambda, &cfg).unwrap();
        let bf = brute_force_lasso(&sys, lambda).unwrap();
        for (a, b) in cd.theta_hat.iter().zip(&bf) {
            worst = worst.max((a - b).abs());
        }
        if cd.converged {
            converged += 1;
            certified += kkt_ok(&sys, &cd.theta_hat, lambda, &cfg) as usize;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    rep.line(
        "AC1",
        worst <= 1e-6 && secs < 10.0,
        "solver correctness",
        format!("max coordinate gap {worst:.2e} (≤ 1e-6) over 200 instances in {secs:.2} s (< 10 s)"),
    );

    let mut zero_ok = true;
    let mut mle_gap = 0.0f64;
    for k in 0..50u64 {
        let p = 1 + (k as usize % 3);
        let sys = random_system(500 + k, p, 50);
        for scale in [1.0, 1.5, 10.0] {
            let res = lasso_solve(&sys, scale * sys.linear_sup(), &cfg).unwrap();
            zero_ok &= res.theta_hat.iter().all(|v| *v == 0.0);
        }
        let tight = LassoConfig {
            tol: 1e-14,
            max_sweeps: 200_000,
            ..cfg
        };
        let l0 = lasso_solve(&sys, 0.0, &tight).unwrap();
        let mle = mle_solve(&sys).unwrap();
        for (a, b) in l0.theta_hat.iter().zip(&mle.theta_hat) {
            mle_gap = mle_gap.max((a - b).abs());
        }
    }

    let mut monotone = true;
    let mut worst_rise = 0.0f64;
    for k in 0..50u64 {
        let p = 2 + (k as usize % 8);
        let sys = random_system(1_000 + k, p, 200);
        let grid = log_grid(sys.linear_sup(), 1e-3, 30);
        let path = lasso_path(&sys, &grid, &cfg).unwrap();
        for (res, &lambda) in path.iter().zip(&grid) {
            if res.converged {
                converged += 1;
                certified += kkt_ok(&sys, &res.theta_hat, lambda, &cfg) as usize;
            }
        }
        let l1: Vec<f64> = path.iter().map(|r| r.theta_hat.iter().map(|v| v.abs()).sum()).collect();
        for w in l1.windows(2) {
            let rise = w[0] - w[1];
            worst_rise = worst_rise.max(rise);
            monotone &= rise <= 1e-9;
        }
    }
    rep.line(
        "AC2",
        certified == converged && zero_ok && mle_gap <= 1e-8,
        "KKT certification",
        format!(
            "{certified}/{converged} converged solves certified; λ ≥ ‖ℓ‖∞ gives zero: {zero_ok}; λ=0 vs MLE gap {mle_gap:.2e} (≤ 1e-8)"
        ),
    );
    rep.line(
        "AC3",
        monotone,
        "ℓ₁-path monotonicity",
        format!("largest ‖θ̂‖₁ decrease toward smaller λ {worst_rise:.2e} (slack 1e-9) on 50 systems × 30 λ"),
    );
}

/// Lyapunov solver, transition covariance and the exact sampler.
fn ou_machinery(rep: &mut Report) {
    let mut lyap = 0.0f64;
    for k in 0..100u64 {
        let d = 1 + (k as usize % 20);
        let a = random_stable(k, d, 0.3);
        let c = stationary_covariance(&a).unwrap();
        let r = &a * &c + &c * a.transpose() - DMatrix::<f64>::identity(d, d);
        lyap = lyap.max(r.abs().max());
    }
    let mut half = 0.0f64;
    for d in [1, 5, 12] {
        let c = stationary_covariance(&(DMatrix::identity(d, d) * 0.5)).unwrap();
        half = half.max((c - DMatrix::<f64>::identity(d, d)).abs().max());
    }
    let mut quad = 0.0f64;
    for k in 0..10u64 {
        let a = random_stable(500 + k, 2 + (k as usize % 4), 0.2);
        for dt in [0.01, 0.3, 1.0] {
            let s = transition_covariance(&a, dt).unwrap();
            quad = quad.max((s - simpson_covariance(&a, dt, 2000)).abs().max());
        }
    }
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, -0.2, 1.5, 0.1, 0.0, 0.4, 0.8]);
    let c = stationary_covariance(&a).unwrap();
    let (n, batches) = (1_000_000usize, 1000usize);
    let traj = simulate_ou_exact(&a, n, 0.1, 2024, true).unwrap();
    let per = n / batches;
    let mut worst_z = 0.0f64;
    for r in 0..3 {
        for s in 0..3 {
            let means: Vec<f64> = (0..batches)
                .map(|b| {
                    (b * per..(b + 1) * per)
                        .map(|i| traj.state(i)[r] * traj.state(i)[s])
                        .sum::<f64>()
                        / per as f64
                })
                .collect();
            let (m, sd) = drift_lasso::metrics::mean_sd(&means);
            worst_z = worst_z.max((m - c[(r, s)]).abs() / (sd / (batches as f64).sqrt()));
        }
    }
    rep.line(
        "AC4",
        lyap <= 1e-10 && half <= 1e-12 && quad <= 1e-8 && worst_z <= 3.0,
        "OU machinery",
        format!(
            "Lyapunov residual {lyap:.1e} (≤ 1e-10), 0.5·I gap {half:.1e} (≤ 1e-12), quadrature gap {quad:.1e} (≤ 1e-8), sampler max |z| {worst_z:.2} (≤ 3)"
        ),
    );

    let cfg = LassoConfig::default();
    let mut gap = 0.0f64;
    for k in 0..20u64 {
        let d = 2 + (k as usize % 3);
        let a = random_stable(900 + k, d, 0.5);
        let traj = simulate_ou_exact(&a, 300, 0.05, k, true).unwrap();
        let sys = build_gram(&traj, &DriftBasis::ou_linear(d).unwrap()).unwrap();
        let lambda = rng::rng(k).random_range(0.05..0.8) * sys.linear_sup();
        let dense = lasso_solve(&sys, lambda, &cfg).unwrap();
        let ou = lasso_ou(&traj, lambda, &cfg).unwrap();
        for (x, y) in ou.a_hat.to_vec().iter().zip(&dense.theta_hat) {
            gap = gap.max((x - y).abs());
        }
    }
    rep.line(
        "AC5",
        gap <= 1e-9,
        "formulation equivalence",
        format!("max |vec(Â) − θ̂| {gap:.2e} (≤ 1e-9) on 20 instances"),
    );
}

fn config(command: Command, out: &Path, sets: &[&str]) -> ExperimentConfig {
    let inv = Invocation {
        sets: sets.iter().map(|s| s.to_string()).collect(),
        out: Some(out.to_path_buf()),
        ..Invocation::default()
    };
    load_config(command, &inv).unwrap()
}

fn experiments(rep: &mut Report, scratch: &Path) {
    let cfg = config(Command::SupportRecovery, &scratch.join("sr"), &[]);
    let mut out = OutputDir::create(&cfg.out).unwrap();
    let clock = Instant::now();
    let o = support_recovery::run(&cfg, &mut out).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let (l, m) = (o.summary_for("lasso").unwrap(), o.summary_for("mle").unwrap());
    rep.line(
        "AC6",
        l.median_f1 > m.median_f1 && l.median_l2 < m.median_l2 && secs <= 600.0,
        "support recovery",
        format!(
            "median F1 Lasso {:.3} vs MLE {:.3} (need >), median ℓ₂ Lasso {:.3} vs MLE {:.3} (need <), {} reps in {secs:.0} s",
            l.median_f1, m.median_f1, l.median_l2, m.median_l2, l.reps
        ),
    );

    let cfg = config(Command::DimensionSweep, &scratch.join("ds"), &[]);
    let mut out = OutputDir::create(&cfg.out).unwrap();
    let clock = Instant::now();
    let o = dimension_sweep::run(&cfg, &mut out).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let (lasso, mle) = (o.series("lasso"), o.series("mle"));
    let mut ok = secs <= 1800.0;
    let mut detail = Vec::new();
    for (l, m) in lasso.iter().zip(&mle) {
        ok &= l.mean_l1 <= m.mean_l1 && l.mean_l2 <= m.mean_l2;
        detail.push(format!("p={} ℓ₁ {:.1}/{:.1} ℓ₂ {:.2}/{:.2}", l.p, l.mean_l1, m.mean_l1, l.mean_l2, m.mean_l2));
    }
    rep.line(
        "AC7",
        ok,
        "dimension sweep",
        format!("Lasso/MLE means {}; {secs:.0} s", detail.join(", ")),
    );

    let cfg = config(Command::RateStudy, &scratch.join("rs"), &[]);
    let mut out = OutputDir::create(&cfg.out).unwrap();
    let o = rate_study::run(&cfg, &mut out).unwrap();
    rep.line(
        "AC8",
        (-0.65..=-0.35).contains(&o.fit.slope),
        "rate regime",
        format!(
            "log-log slope {:.3} (need [−0.65, −0.35]), r² {:.3}, d²nΔₙ² = {:.0} at every T (regime-contaminated: {})",
            o.fit.slope,
            o.fit.r2,
            o.summary[0].regime_value,
            o.contaminated
        ),
    );

    let cfg = config(Command::Verify, &scratch.join("vc"), &["kind=\"verify-concentration\""]);
    let mut out = OutputDir::create(&cfg.out).unwrap();
    let o = verify::run_concentration(&cfg, &mut out).unwrap();
    let c = &cfg.concentration;
    let mut bound_gap = 0.0f64;
    let (m, l, d) = (1.0f64, 2.0f64, c.linear_a_diag.len() as f64);
    for row in &o.linear {
        let contraction = 1.0 - (-m * c.linear_delta_n).exp();
        let expo = row.level.powi(2) * c.linear_n as f64 * contraction.powi(2)
            / (64.0 * d * c.linear_delta_n * (4.0 * l * c.linear_delta_n).exp());
        bound_gap = bound_gap.max((row.bound - (-expo).exp()).abs());
    }
    let ou = drift_lasso::simulate::ou_spectral_constants(&DMatrix::from_diagonal(
        &nalgebra::DVector::from_column_slice(&c.ou_a_diag),
    ))
    .unwrap();
    for row in &o.ou {
        let x = row.level;
        let h = ou.m_frak * x * x / (8.0 * ou.p_frak * ou.l_max * (x + ou.l_max));
        debug_assert_eq!(h, h0_raw(x, ou.m_frak, ou.p_frak, ou.l_max));
        let b = 2.0 * (-(c.ou_n as f64 * c.ou_delta_n) * h).exp();
        bound_gap = bound_gap.max((row.bound - b).abs() / b.max(1.0));
    }
    let tails_ok = o.linear.iter().chain(&o.ou).all(|r| r.passes());
    let worst = o
        .linear
        .iter()
        .chain(&o.ou)
        .map(|r| r.empirical - r.bound - 3.0 * r.se)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.line(
        "AC9",
        tails_ok && bound_gap <= 1e-14,
        "concentration audits",
        format!(
            "{} levels, {} reps each; max (freq − bound − 3se) {worst:.2e} (≤ 0); bound recomputation gap {bound_gap:.1e} (≤ 1e-14)",
            o.linear.len() + o.ou.len(),
            c.reps
        ),
    );

    let cfg = config(Command::Verify, &scratch.join("vs"), &[]);
    let mut out = OutputDir::create(&cfg.out).unwrap();
    let o = verify::run_sets(&cfg, &mut out).unwrap();
    let t = o.event("martingale").unwrap();
    let oracle = o.event("oracle").unwrap();
    rep.line(
        "AC10",
        t.passes && oracle.passes,
        "event sets and oracle inequality",
        format!(
            "P(𝒯) {:.3} (≥ {:.2} − 3se), oracle {:.3} (≥ {:.2} − 3se) over {} reps at λ = {:.4}",
            t.frequency, t.target, oracle.frequency, oracle.target, t.reps, o.lambda
        ),
    );
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn reproducibility(rep: &mut Report, scratch: &Path) {
    let runs: [(Command, &[&str]); 7] = [
        (Command::SupportRecovery, &["reps=4", "sampling.horizon=2"]),
        (Command::DimensionSweep, &["reps=3", "sampling.horizon=2", "sweep.p_values=[10, 20]"]),
        (Command::RateStudy, &["reps=4", "rate.horizons=[50, 100, 200]"]),
        (Command::Verify, &["reps=8", "audit.budget=200"]),
        (
            Command::Verify,
            &["kind=\"verify-concentration\"", "concentration.reps=200", "concentration.ou_n=500"],
        ),
        (Command::Estimate, &[]),
        (Command::Cv, &[]),
    ];
    let mut identical = 0;
    let mut files = 0;
    for (k, (command, sets)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (tag, jobs) in [("a", 1), ("b", 4), ("c", 1)] {
            let out = scratch.join(format!("repro{k}{tag}"));
            let inv = Invocation {
                sets: sets.iter().map(|s| s.to_string()).collect(),
                out: Some(out.clone()),
                jobs: Some(jobs),
                ..Invocation::default()
            };
            execute(*command, &inv).unwrap();
            outputs.push(csv_bytes(&out));
        }
        files += outputs[0].len();
        if outputs[0] == outputs[1] && outputs[0] == outputs[2] && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    rep.line(
        "AC11",
        identical == runs.len(),
        "reproducibility",
        format!("{identical}/{} experiments byte-identical across reruns and --jobs 1/4 ({files} CSV files)", runs.len()),
    );
}

fn main() {
    let scratch = std::env::temp_dir().join(format!("drift-lasso-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&scratch).unwrap();
    let mut rep = Report { failures: 0 };
    solver(&mut rep);
    ou_machinery(&mut rep);
    experiments(&mut rep, &scratch);
    reproducibility(&mut rep, &scratch);
    let _ = std::fs::remove_dir_all(&scratch);
    println!("{} of 11 criteria failed", rep.failures);
}
