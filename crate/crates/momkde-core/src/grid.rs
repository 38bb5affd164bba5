//! Rectangular evaluation grids with trapezoidal quadrature.
//!
//! A grid is the shared integration domain for density normalization and
//! for the divergence metrics: a box with uniformly spaced nodes along
//! each axis, walked in row-major order (last axis fastest).

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Points;
use crate::error::{CoreError, Result};

/// Default cap on the total node count, keeping quadrature tractable.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// A regular rectangular grid over a d-dimensional box.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points_per_axis: Vec<usize>,
    spacing: Vec<f64>,
}

impl EvaluationGrid {
    /// Builds a grid with the default node cap.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points_per_axis: Vec<usize>) -> Result<Self> {
        Self::with_node_cap(lower, upper, points_per_axis, DEFAULT_NODE_CAP)
    }

    /// Builds a grid, rejecting more than `node_cap` total nodes.
    pub fn with_node_cap(
        lower: Vec<f64>,
        upper: Vec<f64>,
        points_per_axis: Vec<usize>,
        node_cap: usize,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != points_per_axis.len() {
            return Err(CoreError::Shape(format!(
                "grid bounds and resolution must share one dimension, got {}/{}/{}",
                lower.len(),
                upper.len(),
                points_per_axis.len()
            )));
        }
        let mut total: usize = 1;
        for axis in 0..lower.len() {
            let (lo, hi, n) = (lower[axis], upper[axis], points_per_axis[axis]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(CoreError::Numeric(format!("grid bounds on axis {axis} are not finite")));
            }
            if lo >= hi {
                return Err(CoreError::Param(format!(
                    "grid axis {axis} needs lower < upper, got [{lo}, {hi}]"
                )));
            }
            if n < 2 {
                return Err(CoreError::Param(format!(
                    "grid axis {axis} needs at least 2 nodes, got {n}"
                )));
            }
            total = total
                .checked_mul(n)
                .filter(|&t| t <= node_cap)
                .ok_or_else(|| {
                    CoreError::Param(format!("grid exceeds the node cap of {node_cap}"))
                })?;
        }
        let spacing = lower
            .iter()
            .zip(&upper)
            .zip(&points_per_axis)
            .map(|((lo, hi), n)| (hi - lo) / (n - 1) as f64)
            .collect();
        Ok(Self { lower, upper, points_per_axis, spacing })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Volume of one grid cell, the product of the axis spacings.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Total number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    /// Coordinate of node `index` along `axis`.
    pub fn axis_coordinate(&self, axis: usize, index: usize) -> f64 {
        debug_assert!(index < self.points_per_axis[axis]);
        if index + 1 == self.points_per_axis[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + index as f64 * self.spacing[axis]
        }
    }

    /// Writes the coordinates of the node with row-major index `flat`
    /// (last axis fastest) into `out`.
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let n = self.points_per_axis[axis];
            out[axis] = self.axis_coordinate(axis, rest % n);
            rest /= n;
        }
        debug_assert_eq!(rest, 0, "flat index out of range");
    }

    /// All node coordinates as a row-major point set.
    pub fn nodes(&self) -> Points {
        let d = self.dim();
        let mut values = Vec::with_capacity(self.num_nodes() * d);
        let mut buf = alloc::vec![0.0; d];
        for flat in 0..self.num_nodes() {
            self.node(flat, &mut buf);
            values.extend_from_slice(&buf);
        }
        Points::new(values, d).expect("grid nodes are finite by construction")
    }

    /// Trapezoidal quadrature weight of node `flat`: the cell volume times
    /// one half per axis on which the node sits on the boundary.
    fn trapezoid_weight(&self, flat: usize) -> f64 {
        let mut weight = self.cell_volume();
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let n = self.points_per_axis[axis];
            let idx = rest % n;
            rest /= n;
            if idx == 0 || idx + 1 == n {
                weight *= 0.5;
            }
        }
        weight
    }
}

/// Trapezoidal-rule approximation of the integral of `values` over the
/// grid box. `values` must be in the grid's node order.
pub fn integrate_on_grid(grid: &EvaluationGrid, values: &[f64]) -> Result<f64> {
    if values.len() != grid.num_nodes() {
        return Err(CoreError::Shape(format!(
            "got {} values for a grid of {} nodes",
            values.len(),
            grid.num_nodes()
        )));
    }
    let mut total = 0.0;
    for (flat, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(CoreError::Numeric(format!("NaN value at grid node {flat}")));
        }
        total += grid.trapezoid_weight(flat) * v;
    }
    Ok(total)
}

/// Divides `values` by their grid integral Z and returns `(values / Z, Z)`.
pub fn normalize_density(grid: &EvaluationGrid, values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let z = integrate_on_grid(grid, values)?;
    if !z.is_finite() || z <= 0.0 {
        return Err(CoreError::Numeric(format!(
            "cannot normalize: grid integral is {z}, expected a positive finite value"
        )));
    }
    Ok((values.iter().map(|v| v / z).collect(), z))
}

/// A grid derived from data bounds, along with build diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBuild {
    pub grid: EvaluationGrid,
    /// Axes whose data range collapsed to a point and were widened to ±1.
    pub degenerate_axes: Vec<usize>,
    /// False above three dimensions, where quadrature on this grid is not
    /// trusted for normalization or divergences.
    pub quadrature_reliable: bool,
}

/// Builds a grid spanning the data, padded by `padding_bandwidths · h_ref`
/// on every axis. An axis whose minimum equals its maximum is widened to
/// ±1 around the value instead, and reported in the result.
pub fn build_grid(
    points: &Points,
    h_ref: f64,
    padding_bandwidths: f64,
    points_per_axis: usize,
) -> Result<GridBuild> {
    if points.is_empty() {
        return Err(CoreError::EmptyModel);
    }
    if !(h_ref.is_finite() && h_ref > 0.0) {
        return Err(CoreError::Param(format!(
            "reference bandwidth must be positive and finite, got {h_ref}"
        )));
    }
    if !(padding_bandwidths.is_finite() && padding_bandwidths >= 0.0) {
        return Err(CoreError::Param(format!(
            "padding must be a nonnegative number of bandwidths, got {padding_bandwidths}"
        )));
    }
    let d = points.dim();
    let pad = padding_bandwidths * h_ref;
    let mut lower = alloc::vec![f64::INFINITY; d];
    let mut upper = alloc::vec![f64::NEG_INFINITY; d];
    for row in points.iter_rows() {
        for (axis, &x) in row.iter().enumerate() {
            lower[axis] = lower[axis].min(x);
            upper[axis] = upper[axis].max(x);
        }
    }
    let mut degenerate_axes = Vec::new();
    for axis in 0..d {
        if lower[axis] == upper[axis] {
            degenerate_axes.push(axis);
            lower[axis] -= 1.0;
            upper[axis] += 1.0;
        } else {
            lower[axis] -= pad;
            upper[axis] += pad;
        }
    }
    let grid = EvaluationGrid::new(lower, upper, alloc::vec![points_per_axis; d])?;
    Ok(GridBuild { grid, degenerate_axes, quadrature_reliable: d <= 3 })
}
