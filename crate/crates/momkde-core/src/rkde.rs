//! Robust KDE via M-estimation of the kernel mean in the RKHS.
//!
//! Instead of the plain mean of the feature vectors φ(X_i), the estimate
//! minimizes Σ_i ρ(‖φ(X_i) − g‖) for a robust loss ρ, fitted by
//! iteratively reweighted least squares: compute each point's RKHS
//! distance to the current weighted mean, reweight by ψ(d)/d, normalize,
//! repeat. The result is a weight vector usable directly in a weighted
//! KDE. Outlying points sit far from the mean in feature space and are
//! progressively down-weighted; with the redescending Hampel loss their
//! weight reaches exactly zero beyond the cutoff.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Points;
use crate::error::{CoreError, Result};
use crate::gram::Gram;
use crate::kernel::{KernelFamily, KernelSpec};

/// Default relative objective-change tolerance for the IRLS loop.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap for the IRLS loop.
pub const DEFAULT_MAX_ITER: usize = 100;

/// A robust loss ρ with its influence function ψ = ρ′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RobustLoss {
    /// Quadratic up to `a`, linear beyond.
    Huber { a: f64 },
    /// Quadratic to `a`, flat influence to `b`, descending to zero at `c`,
    /// constant beyond.
    Hampel { a: f64, b: f64, c: f64 },
}

impl RobustLoss {
    pub fn huber(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(CoreError::Param(format!("Huber threshold must be positive, got {a}")));
        }
        Ok(RobustLoss::Huber { a })
    }

    pub fn hampel(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite() && a > 0.0 && a < b && b < c) {
            return Err(CoreError::Param(format!(
                "Hampel knots must satisfy 0 < a < b < c, got ({a}, {b}, {c})"
            )));
        }
        Ok(RobustLoss::Hampel { a, b, c })
    }

    /// Loss value ρ(t) for t ≥ 0.
    pub fn rho(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            RobustLoss::Huber { a } => {
                if t <= a {
                    0.5 * t * t
                } else {
                    a * t - 0.5 * a * a
                }
            }
            RobustLoss::Hampel { a, b, c } => {
                if t <= a {
                    0.5 * t * t
                } else if t <= b {
                    a * t - 0.5 * a * a
                } else if t <= c {
                    // ρ(c) minus the remaining area under the descending ramp.
                    0.5 * a * (b + c - a) - 0.5 * a * (c - t) * (c - t) / (c - b)
                } else {
                    0.5 * a * (b + c - a)
                }
            }
        }
    }

    /// Influence ψ(t) = ρ′(t) for t ≥ 0.
    pub fn psi(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            RobustLoss::Huber { a } => t.min(a),
            RobustLoss::Hampel { a, b, c } => {
                if t <= a {
                    t
                } else if t <= b {
                    a
                } else if t <= c {
                    a * (c - t) / (c - b)
                } else {
                    0.0
                }
            }
        }
    }

    /// IRLS weight ψ(t)/t, extended continuously to 1 at t = 0.
    pub fn weight(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            1.0
        } else {
            self.psi(t) / t
        }
    }
}

/// RKHS distances d_i = ‖φ(X_i) − Σ_j w_j φ(X_j)‖ from the Gram matrix:
/// d_i² = G_ii − 2(Gw)_i + wᵀGw, clamped at zero against roundoff.
pub fn rkhs_distances(gram: &Gram, weights: &[f64]) -> Result<Vec<f64>> {
    let n = gram.n();
    if weights.len() != n {
        return Err(CoreError::Shape(format!(
            "{} weights for a {n} x {n} Gram matrix",
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-10 {
        return Err(CoreError::Param(format!(
            "weights must be nonnegative and sum to 1, got sum {sum}"
        )));
    }
    let gw = gram.mul_vec(weights);
    let wgw: f64 = gw.iter().zip(weights).map(|(a, b)| a * b).sum();
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        let gii = gram.get(i, i);
        let sq = gii - 2.0 * gw[i] + wgw;
        if sq < -1e-12 * gii.abs().max(1.0) {
            return Err(CoreError::Numeric(format!(
                "squared RKHS distance {sq} at point {i}: matrix is not positive semidefinite"
            )));
        }
        distances.push(sq.max(0.0).sqrt());
    }
    Ok(distances)
}

/// Linear-interpolation percentile of an ascending slice, with `p` in
/// [0, 100] mapped onto the rank range 0..n−1.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Hampel knots from a distance sample: a, b, c are the 50th, 75th and
/// 95th linear-interpolation percentiles.
pub fn hampel_parameters_from_distances(distances: &[f64]) -> Result<RobustLoss> {
    if distances.len() < 3 {
        return Err(CoreError::Param(format!(
            "need at least 3 distances to place the Hampel knots, got {}",
            distances.len()
        )));
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(CoreError::Param("distances must be nonnegative and finite".into()));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite distances"));
    let a = percentile(&sorted, 50.0);
    let b = percentile(&sorted, 75.0);
    let c = percentile(&sorted, 95.0);
    RobustLoss::hampel(a, b, c).map_err(|_| {
        CoreError::Param(format!(
            "distance percentiles ({a}, {b}, {c}) do not satisfy 0 < a < b < c; \
             the sample is too concentrated for a Hampel fit"
        ))
    })
}

/// Result of an IRLS fit: a simplex weight vector and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RkdeFit {
    /// Final weights, nonnegative and summing to one.
    pub weights: Vec<f64>,
    /// RKHS distances at the final weights.
    pub distances: Vec<f64>,
    /// Objective Σ ρ(d_i) per iteration, starting at uniform weights.
    pub objective_trace: Vec<f64>,
    /// Number of reweighting steps taken.
    pub iterations: usize,
    /// Whether the relative objective change fell below the tolerance.
    pub converged: bool,
}

fn objective(loss: &RobustLoss, distances: &[f64]) -> f64 {
    distances.iter().map(|&d| loss.rho(d)).sum()
}

fn fit_with_gram(
    gram: &Gram,
    loss: &RobustLoss,
    tol: f64,
    max_iter: usize,
) -> Result<RkdeFit> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CoreError::Param(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(CoreError::Param("need at least one iteration".into()));
    }
    let n = gram.n();
    let mut weights = alloc::vec![1.0 / n as f64; n];
    let mut distances = rkhs_distances(gram, &weights)?;
    let mut current = objective(loss, &distances);
    let mut objective_trace = alloc::vec![current];
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=max_iter {
        let raw: Vec<f64> = distances.iter().map(|&d| loss.weight(d)).collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(CoreError::Degenerate(
                "every point fell beyond the loss cutoff; no weight left to assign".into(),
            ));
        }
        weights = raw.iter().map(|r| r / total).collect();
        distances = rkhs_distances(gram, &weights)?;
        let next = objective(loss, &distances);
        objective_trace.push(next);
        iterations = iter;
        if (next - current).abs() <= tol * current.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        current = next;
    }
    Ok(RkdeFit { weights, distances, objective_trace, iterations, converged })
}

fn check_rkde_inputs(points: &Points, kernel: &KernelSpec) -> Result<()> {
    if kernel.family() != KernelFamily::Gaussian {
        return Err(CoreError::Param(format!(
            "robust RKHS fitting needs a positive semidefinite Gram matrix; only the \
             gaussian family is supported, got {}",
            kernel.family()
        )));
    }
    if kernel.dim() != points.dim() {
        return Err(CoreError::Shape(format!(
            "kernel dimension {} does not match data dimension {}",
            kernel.dim(),
            points.dim()
        )));
    }
    Ok(())
}

/// IRLS fit with an explicit loss.
pub fn fit_rkde(
    points: &Points,
    bandwidth: f64,
    kernel: &KernelSpec,
    loss: &RobustLoss,
    tol: f64,
    max_iter: usize,
) -> Result<RkdeFit> {
    check_rkde_inputs(points, kernel)?;
    let gram = Gram::gaussian(points, bandwidth)?;
    fit_with_gram(&gram, loss, tol, max_iter)
}

/// IRLS fit with Hampel knots placed at the 50th/75th/95th percentiles of
/// the uniform-weight distances, then frozen for the whole fit. Returns
/// the fit together with the loss that was used.
pub fn fit_rkde_hampel(
    points: &Points,
    bandwidth: f64,
    kernel: &KernelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<(RkdeFit, RobustLoss)> {
    check_rkde_inputs(points, kernel)?;
    let gram = Gram::gaussian(points, bandwidth)?;
    let n = gram.n();
    let uniform = alloc::vec![1.0 / n as f64; n];
    let initial_distances = rkhs_distances(&gram, &uniform)?;
    let loss = hampel_parameters_from_distances(&initial_distances)?;
    let fit = fit_with_gram(&gram, &loss, tol, max_iter)?;
    Ok((fit, loss))
}
