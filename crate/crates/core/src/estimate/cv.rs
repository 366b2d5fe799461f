//! Blocked cross-validation over contiguous time segments.

use super::gram::{accumulate, GramAccumulator};
use super::lasso::{lasso_path, LassoConfig};
use crate::error::{check_len, Error, Result};
use crate::model::DriftBasis;
use crate::simulate::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambda_star: f64,
    /// Grid in the order supplied.
    pub lambdas: Vec<f64>,
    /// `scores[g][k]`: held-out contrast of fold `k` at `lambdas[g]`.
    pub scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    /// Some block has fewer increments than parameters.
    pub short_block: bool,
}

/// Block boundaries splitting `n` increments into `k` contiguous pieces.
pub fn block_bounds(n: usize, k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|b| (b * n / k, (b + 1) * n / k)).collect()
}

pub fn cross_validate(
    traj: &Trajectory,
    basis: &DriftBasis,
    lambda_grid: &[f64],
    folds: usize,
    cfg: &LassoConfig,
) -> Result<CvResult> {
    check_len("trajectory dimension", basis.d(), traj.d())?;
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput("λ grid must be nonempty and strictly positive".into()));
    }
    let n = traj.n();
    let bounds = block_bounds(n, folds);
    if bounds.iter().any(|(a, b)| b - a < 2) {
        return Err(Error::InvalidInput(format!(
            "{n} increments cannot fill {folds} blocks of at least two"
        )));
    }
    let short_block = bounds.iter().any(|(a, b)| b - a < basis.p());
    let blocks: Vec<GramAccumulator> = bounds
        .iter()
        .map(|&(a, b)| accumulate(traj, basis, a, b))
        .collect();

    let mut order: Vec<usize> = (0..lambda_grid.len()).collect();
    order.sort_by(|&a, &b| lambda_grid[b].total_cmp(&lambda_grid[a]));
    order.dedup_by(|a, b| lambda_grid[*a] == lambda_grid[*b]);
    let descending: Vec<f64> = order.iter().map(|&g| lambda_grid[g]).collect();

    let dt = traj.delta_n();
    let mut scores = vec![vec![0.0; folds]; lambda_grid.len()];
    for k in 0..folds {
        let mut train = GramAccumulator::new(basis);
        for (b, acc) in blocks.iter().enumerate() {
            if b != k {
                train.merge(acc);
            }
        }
        let train = train.finish(dt)?;
        let held = blocks[k].finish(dt)?;
        let path = lasso_path(&train, &descending, cfg)?;
        for (res, &lambda) in path.iter().zip(&descending) {
            let score = held.contrast(&res.theta_hat);
            for (g, row) in scores.iter_mut().enumerate() {
                if lambda_grid[g] == lambda {
                    row[k] = score;
                }
            }
        }
    }

    let mean_scores: Vec<f64> = scores
        .iter()
        .map(|row| row.iter().sum::<f64>() / folds as f64)
        .collect();
    let mut best = 0;
    for g in 1..lambda_grid.len() {
        let (m, mb) = (mean_scores[g], mean_scores[best]);
        if m < mb || (m == mb && lambda_grid[g] > lambda_grid[best]) {
            best = g;
        }
    }
    Ok(CvResult {
        lambda_star: lambda_grid[best],
        lambdas: lambda_grid.to_vec(),
        scores,
        mean_scores,
        short_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_cover_range() {
        let b = block_bounds(103, 5);
        assert_eq!(b.first().unwrap().0, 0);
        assert_eq!(b.last().unwrap().1, 103);
        assert!(b.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
