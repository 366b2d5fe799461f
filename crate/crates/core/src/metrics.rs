//! Error norms, support scores and log-log rate fits.

use serde::Serialize;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
}

pub fn error_norms(theta_hat: &[f64], theta0: &[f64]) -> Result<ErrorNorms> {
    check_len("estimate length", theta0.len(), theta_hat.len())?;
    let (l1, sq) = theta_hat
        .iter()
        .zip(theta0)
        .fold((0.0, 0.0), |(a, b), (x, y)| {
            let e = x - y;
            (a + e.abs(), b + e * e)
        });
    Ok(ErrorNorms { l1, l2: sq.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub threshold: f64,
}

/// Supports are `{j : |θ_j| > tau}`. Precision is 0 when nothing is predicted;
/// recall is 1 when the true support is empty.
pub fn support_score(theta_hat: &[f64], theta0: &[f64], tau: f64) -> Result<SupportScore> {
    check_len("estimate length", theta0.len(), theta_hat.len())?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be ≥ 0, got {tau}")));
    }
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (h, t) in theta_hat.iter().zip(theta0) {
        match (h.abs() > tau, t.abs() > tau) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let (precision, recall) = if tp + fp + fneg == 0 {
        (1.0, 1.0)
    } else {
        let pr = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let rc = if tp + fneg > 0 { tp as f64 / (tp + fneg) as f64 } else { 1.0 };
        (pr, rc)
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(SupportScore {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        threshold: tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares fit of `log(error)` on `log(T)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("rate fit needs at least two points".into()));
    }
    if points.iter().any(|&(t, e)| !(t > 0.0 && e > 0.0)) {
        return Err(Error::InvalidInput("rate fit needs positive horizons and errors".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs at least two distinct horizons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
    })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
