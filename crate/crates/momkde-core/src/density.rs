//! Weighted kernel density evaluation shared by every estimator.
//!
//! The plain KDE is the special case of uniform weights 1/n; the robust
//! baselines reuse the same evaluation with their fitted weight vectors.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Points;
use crate::error::{CoreError, Result};
use crate::grid::EvaluationGrid;
use crate::kernel::KernelSpec;

/// Maximum drift of a weight vector's sum away from 1.
const WEIGHT_SUM_TOL: f64 = 1e-10;

/// A density of the form x ↦ (1/h^d) Σ_i w_i K((X_i − x)/h) with
/// nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDensityEstimate {
    points: Points,
    weights: Vec<f64>,
    bandwidth: f64,
    kernel: KernelSpec,
}

impl WeightedDensityEstimate {
    /// Builds an estimate from explicit weights.
    pub fn new(points: Points, weights: Vec<f64>, bandwidth: f64, kernel: KernelSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::EmptyModel);
        }
        if weights.len() != points.n() {
            return Err(CoreError::Shape(format!(
                "{} weights for {} points",
                weights.len(),
                points.n()
            )));
        }
        if kernel.dim() != points.dim() {
            return Err(CoreError::Shape(format!(
                "kernel dimension {} does not match data dimension {}",
                kernel.dim(),
                points.dim()
            )));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(CoreError::Param(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(CoreError::Param(format!("weight {i} is {w}, expected nonnegative")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(CoreError::Param(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { points, weights, bandwidth, kernel })
    }

    /// Builds the standard KDE with uniform weights 1/n.
    pub fn uniform(points: Points, bandwidth: f64, kernel: KernelSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::EmptyModel);
        }
        let n = points.n();
        let weights = alloc::vec![1.0 / n as f64; n];
        Self::new(points, weights, bandwidth, kernel)
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Density value at a single query point, summing contributions in
    /// data-index order so repeated calls are bitwise reproducible.
    pub fn evaluate_at(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.points.dim() {
            return Err(CoreError::Shape(format!(
                "query of dimension {} against data of dimension {}",
                query.len(),
                self.points.dim()
            )));
        }
        Ok(self.evaluate_at_unchecked(query))
    }

    fn evaluate_at_unchecked(&self, query: &[f64]) -> f64 {
        let h = self.bandwidth;
        let inv_hd = h.powi(-(self.points.dim() as i32));
        let mut total = 0.0;
        for (row, &w) in self.points.iter_rows().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let dist = row
                .iter()
                .zip(query)
                .map(|(a, b)| {
                    let u = (a - b) / h;
                    u * u
                })
                .sum::<f64>()
                .sqrt();
            total += w * self.kernel.profile_at(dist);
        }
        total * inv_hd
    }

    /// Density values at every query row.
    pub fn evaluate(&self, queries: &Points) -> Result<Vec<f64>> {
        if queries.dim() != self.points.dim() && !queries.is_empty() {
            return Err(CoreError::Shape(format!(
                "queries of dimension {} against data of dimension {}",
                queries.dim(),
                self.points.dim()
            )));
        }
        Ok(queries.iter_rows().map(|q| self.evaluate_at_unchecked(q)).collect())
    }

    /// Density values at every node of `grid`, in the grid's node order.
    pub fn evaluate_on_grid(&self, grid: &EvaluationGrid) -> Result<Vec<f64>> {
        if grid.dim() != self.points.dim() {
            return Err(CoreError::Shape(format!(
                "grid of dimension {} against data of dimension {}",
                grid.dim(),
                self.points.dim()
            )));
        }
        let mut node = alloc::vec![0.0; grid.dim()];
        let mut out = Vec::with_capacity(grid.num_nodes());
        for flat in 0..grid.num_nodes() {
            grid.node(flat, &mut node);
            out.push(self.evaluate_at_unchecked(&node));
        }
        Ok(out)
    }
}
