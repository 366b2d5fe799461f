use nalgebra::{DMatrix, DVector};

use super::gram::GramSystem;
use crate::error::{Error, Result};

const MAX_P: usize = 3;
const SLACK: f64 = 1e-10;

/// Exhaustive Lasso solution for `p ≤ 3` by enumerating sign patterns.
pub fn brute_force_lasso(gram: &GramSystem, lambda: f64) -> Result<Vec<f64>> {
    let p = gram.p();
    if p > MAX_P {
        return Err(Error::InvalidInput(format!(
            "sign enumeration supports p ≤ {MAX_P}, got {p}"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("λ must be ≥ 0, got {lambda}")));
    }
    let dt = gram.delta_n;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(p as u32) {
        let signs: Vec<i8> = (0..p)
            .map(|j| ((code / 3usize.pow(j as u32)) % 3) as i8 - 1)
            .collect();
        let active: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut theta = vec![0.0; p];
        if !active.is_empty() {
            let k = active.len();
            let h = DMatrix::from_fn(k, k, |a, b| 2.0 * dt * gram.gram[(active[a], active[b])]);
            let rhs = DVector::from_fn(k, |a, _| {
                let j = active[a];
                -(gram.linear[j] + lambda * f64::from(signs[j]))
            });
            let Some(sol) = h.lu().solve(&rhs) else {
                continue;
            };
            if sol.iter().any(|v| !v.is_finite()) {
                continue;
            }
            for (a, &j) in active.iter().enumerate() {
                theta[j] = sol[a];
            }
            if active.iter().any(|&j| theta[j] * f64::from(signs[j]) <= 0.0) {
                continue;
            }
        }
        let grad = gram.gradient(&theta);
        let scale = 1.0 + lambda + gram.linear_sup();
        let feasible = (0..p)
            .filter(|&j| signs[j] == 0)
            .all(|j| grad[j].abs() <= lambda + SLACK * scale);
        if !feasible {
            continue;
        }
        let obj = gram.objective(&theta, lambda);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, theta));
        }
    }
    best.map(|(_, t)| t).ok_or_else(|| {
        Error::NumericDegeneracy("no sign pattern satisfies the optimality conditions".into())
    })
}
