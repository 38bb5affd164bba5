//! Bandwidth selection by pseudo-likelihood k-fold cross-validation.
//!
//! For each candidate bandwidth the data is split into k seeded folds;
//! each fold is scored by the log density that a KDE fitted on the other
//! folds assigns to its points. The winning bandwidth maximizes the
//! summed score, with ties going to the smallest candidate. A floor
//! inside the logarithm keeps a single unsupported point from dragging
//! the score to −∞ on compactly supported kernels.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Points;
use crate::density::WeightedDensityEstimate;
use crate::error::{CoreError, Result};
use crate::kernel::KernelSpec;
use crate::mom::partition_blocks;

/// Default fold count.
pub const DEFAULT_FOLDS: usize = 5;
/// Default candidate count for the log-spaced grid.
pub const DEFAULT_GRID_SIZE: usize = 20;
/// Default grid span as multiples of the data scale.
pub const DEFAULT_GRID_SPAN: (f64, f64) = (0.05, 5.0);
/// Floor added inside the log so unsupported points stay finite.
pub const SCORE_FLOOR: f64 = 1e-300;

/// Seeded assignment of each index to one of `k_folds` folds whose sizes
/// differ by at most one.
pub fn fold_assignments(n: usize, k_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if k_folds < 2 {
        return Err(CoreError::Param(format!("need at least 2 folds, got {k_folds}")));
    }
    if n < k_folds {
        return Err(CoreError::Param(format!("need n >= folds, got {n} points for {k_folds}")));
    }
    Ok(partition_blocks(n, k_folds, seed)?.assignments().to_vec())
}

/// Held-out log-likelihood of bandwidth `h` under the given fold split:
/// Σ over folds Σ over held-out points of ln(density + floor). The
/// second return is whether any held-out point saw positive density.
fn score_bandwidth(
    points: &Points,
    folds: &[usize],
    k_folds: usize,
    h: f64,
    kernel: KernelSpec,
) -> Result<(f64, bool)> {
    let mut score = 0.0;
    let mut any_support = false;
    for fold in 0..k_folds {
        let held_out: Vec<usize> =
            (0..points.n()).filter(|&i| folds[i] == fold).collect();
        let training: Vec<usize> =
            (0..points.n()).filter(|&i| folds[i] != fold).collect();
        if held_out.is_empty() {
            continue;
        }
        if training.is_empty() {
            return Err(CoreError::Param("a fold holds out every point".into()));
        }
        let kde = WeightedDensityEstimate::uniform(points.select(&training), h, kernel)?;
        for &i in &held_out {
            let value = kde.evaluate_at(points.row(i))?;
            any_support |= value > SCORE_FLOOR;
            score += (value + SCORE_FLOOR).ln();
        }
    }
    Ok((score, any_support))
}

/// Cross-validation score of a single bandwidth under an explicit fold
/// assignment, exposed for invariance checks.
pub fn cv_score(
    points: &Points,
    folds: &[usize],
    k_folds: usize,
    h: f64,
    kernel: KernelSpec,
) -> Result<f64> {
    if folds.len() != points.n() {
        return Err(CoreError::Shape(format!(
            "{} fold labels for {} points",
            folds.len(),
            points.n()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(CoreError::Param(format!("bandwidth must be positive, got {h}")));
    }
    Ok(score_bandwidth(points, folds, k_folds, h, kernel)?.0)
}

/// Selects the bandwidth from `h_grid` maximizing the k-fold score;
/// returns it with the per-candidate scores. Ties go to the smallest
/// candidate. Errors if no candidate gives any held-out point positive
/// density (the whole grid is too small for the data scale).
pub fn select_bandwidth_cv(
    points: &Points,
    k_folds: usize,
    h_grid: &[f64],
    kernel: KernelSpec,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if h_grid.is_empty() {
        return Err(CoreError::Param("bandwidth grid is empty".into()));
    }
    for pair in h_grid.windows(2) {
        if pair[0] >= pair[1] {
            return Err(CoreError::Param(format!(
                "bandwidth grid must be strictly ascending, got {} before {}",
                pair[0], pair[1]
            )));
        }
    }
    if !(h_grid[0].is_finite() && h_grid[0] > 0.0) {
        return Err(CoreError::Param(format!(
            "bandwidth candidates must be positive, got {}",
            h_grid[0]
        )));
    }
    let folds = fold_assignments(points.n(), k_folds, seed)?;

    let mut scores = Vec::with_capacity(h_grid.len());
    let mut grid_supported = false;
    for &h in h_grid {
        let (score, any_support) = score_bandwidth(points, &folds, k_folds, h, kernel)?;
        grid_supported |= any_support;
        scores.push(score);
    }
    if !grid_supported {
        return Err(CoreError::Selection(
            "every candidate bandwidth leaves all held-out points at zero density; \
             the grid is too small for the data scale"
                .into(),
        ));
    }
    Ok((h_grid[argmax_first(&scores)], scores))
}

/// Index of the maximum, ties resolving to the earliest occurrence (the
/// smallest bandwidth on an ascending grid).
fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Default log-spaced candidate grid: `DEFAULT_GRID_SIZE` bandwidths
/// spanning `DEFAULT_GRID_SPAN` times the geometric mean of the per-axis
/// sample standard deviations.
pub fn default_bandwidth_grid(points: &Points) -> Result<Vec<f64>> {
    if points.n() < 2 {
        return Err(CoreError::Param(format!(
            "need at least 2 points to size a bandwidth grid, got {}",
            points.n()
        )));
    }
    let mut mean_log = 0.0;
    for axis in 0..points.dim() {
        mean_log += points.axis_std(axis)?.ln();
    }
    mean_log /= points.dim() as f64;
    let scale = mean_log.exp();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CoreError::Degenerate(
            "data has a zero-variance axis; cannot derive a bandwidth scale".into(),
        ));
    }
    let (lo, hi) = DEFAULT_GRID_SPAN;
    let (log_lo, log_hi) = ((lo * scale).ln(), (hi * scale).ln());
    let count = DEFAULT_GRID_SIZE;
    Ok((0..count)
        .map(|i| (log_lo + (log_hi - log_lo) * i as f64 / (count - 1) as f64).exp())
        .collect())
}
