//! Divergences between grid densities and rank-based AUC.
//!
//! KL and JS divergences integrate over an evaluation grid by the
//! trapezoidal rule. KL uses the natural log and goes to +∞ when the
//! second density vanishes somewhere the first does not; JS uses base-2
//! logarithms, stays finite, and lies in [0, 1]. AUC scores the detector
//! that flags a point as abnormal when its estimated density falls below
//! a threshold: it is the probability that a random outlier's density
//! sits below a random inlier's, ties counting one half.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Label;
use crate::error::{CoreError, Result};
use crate::grid::{integrate_on_grid, EvaluationGrid};

/// Densities below this are treated as numerically zero.
pub const MASS_FLOOR: f64 = 1e-12;

/// How far a density's grid integral may drift from 1.
const NORMALIZATION_TOL: f64 = 1e-2;

/// Checks that `values` is a density on the grid: nonnegative, finite,
/// and integrating to 1 within the tolerance.
fn check_density(name: &str, values: &[f64], grid: &EvaluationGrid) -> Result<()> {
    if values.len() != grid.num_nodes() {
        return Err(CoreError::Shape(format!(
            "{name} has {} values for a grid of {} nodes",
            values.len(),
            grid.num_nodes()
        )));
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CoreError::Metric(format!("{name} has value {v} at node {i}")));
        }
    }
    let mass = integrate_on_grid(grid, values)?;
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(CoreError::Metric(format!(
            "{name} integrates to {mass}; normalize it before computing divergences"
        )));
    }
    Ok(())
}

/// D_KL(p‖q) in nats by trapezoidal quadrature of p·ln(p/q) over the
/// nodes where p exceeds the mass floor. Returns +∞ as soon as q is
/// exactly zero on such a node, which is how disjoint supports show up
/// on a grid. A subnormal-but-positive q is kept in the quadrature
/// instead: two overlapping Gaussians both have honest tails below any
/// fixed floor, and flagging those nodes as disjoint would turn every
/// finite divergence into +∞ once the grid reaches far enough out.
pub fn kl_divergence(p: &[f64], q: &[f64], grid: &EvaluationGrid) -> Result<f64> {
    check_density("p", p, grid)?;
    check_density("q", q, grid)?;
    let mut integrand = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= MASS_FLOOR {
            integrand.push(0.0);
        } else if qi == 0.0 {
            return Ok(f64::INFINITY);
        } else {
            integrand.push(pi * (pi / qi).ln());
        }
    }
    integrate_on_grid(grid, &integrand)
}

/// D_JS(p, q) in bits: ½ D_KL(p‖m) + ½ D_KL(q‖m) with m the midpoint
/// density and base-2 logarithms. Always finite; clamped to [0, 1]
/// against quadrature roundoff at the closed-form bounds.
pub fn js_divergence(p: &[f64], q: &[f64], grid: &EvaluationGrid) -> Result<f64> {
    check_density("p", p, grid)?;
    check_density("q", q, grid)?;
    let mut integrand = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        let mut v = 0.0;
        if pi > MASS_FLOOR {
            v += 0.5 * pi * (pi / mi).log2();
        }
        if qi > MASS_FLOOR {
            v += 0.5 * qi * (qi / mi).log2();
        }
        integrand.push(v);
    }
    Ok(integrate_on_grid(grid, &integrand)?.clamp(0.0, 1.0))
}

/// AUC of the low-density anomaly detector from density scores and
/// labels: the Mann-Whitney statistic P(outlier score < inlier score)
/// plus half the tie probability, computed through average ranks.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CoreError::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CoreError::Metric("scores contain NaN".into()));
    }
    let n_inliers = labels.iter().filter(|l| **l == Label::Inlier).count();
    let n_outliers = labels.len() - n_inliers;
    if n_inliers == 0 || n_outliers == 0 {
        return Err(CoreError::Metric(
            "AUC needs both classes; got a single-class labeling".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&i, &j| scores[i].partial_cmp(&scores[j]).expect("no NaN scores"));

    // Average 1-based ranks over tie runs, then sum the inliers' ranks.
    let mut rank_sum_inliers = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let average_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if labels[idx] == Label::Inlier {
                rank_sum_inliers += average_rank;
            }
        }
        start = end;
    }
    let n_i = n_inliers as f64;
    let u = rank_sum_inliers - n_i * (n_i + 1.0) / 2.0;
    Ok(u / (n_i * n_outliers as f64))
}
