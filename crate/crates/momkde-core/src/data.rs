//! Point matrices and labeled datasets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

/// Dense row-major matrix of `n` points in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    values: Vec<f64>,
    dim: usize,
}

impl Points {
    /// Wraps a flat row-major buffer. The buffer length must be a multiple
    /// of `dim` and every coordinate must be finite.
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::Param("point dimension must be at least 1".into()));
        }
        if values.len() % dim != 0 {
            return Err(CoreError::Shape(format!(
                "{} coordinates do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Numeric("non-finite coordinate in point matrix".into()));
        }
        Ok(Self { values, dim })
    }

    /// Builds a matrix from per-row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(CoreError::Shape(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, dim)
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `i`-th point as a coordinate slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self { values, dim: self.dim }
    }

    /// Sample standard deviation of coordinate `axis` (n − 1 denominator).
    pub fn axis_std(&self, axis: usize) -> Result<f64> {
        if axis >= self.dim {
            return Err(CoreError::Shape(format!(
                "axis {axis} out of range for dimension {}",
                self.dim
            )));
        }
        let n = self.n();
        if n < 2 {
            return Err(CoreError::Param("standard deviation needs at least 2 points".into()));
        }
        let mean = self.iter_rows().map(|r| r[axis]).sum::<f64>() / n as f64;
        let ss = self.iter_rows().map(|r| (r[axis] - mean).powi(2)).sum::<f64>();
        Ok((ss / (n - 1) as f64).sqrt())
    }
}

/// Inlier/outlier tag for a data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Inlier,
    Outlier,
}

/// A point matrix with optional labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Points,
    pub labels: Option<Vec<Label>>,
    pub name: String,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        points: Points,
        labels: Option<Vec<Label>>,
        name: impl Into<String>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != points.n() {
                return Err(CoreError::Shape(format!(
                    "{} labels for {} points",
                    labels.len(),
                    points.n()
                )));
            }
        }
        Ok(Self { points, labels, name: name.into(), seed })
    }

    pub fn unlabeled(points: Points, name: impl Into<String>) -> Self {
        Self { points, labels: None, name: name.into(), seed: None }
    }

    pub fn n(&self) -> usize {
        self.points.n()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Number of labeled outliers, if labels are present.
    pub fn outlier_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|ls| ls.iter().filter(|&&l| l == Label::Outlier).count())
    }

    /// Fraction of labeled outliers |O|/n, if labels are present.
    pub fn contamination(&self) -> Option<f64> {
        self.outlier_count().map(|o| o as f64 / self.n() as f64)
    }
}

/// Rounds half-up, matching the convention used for kept-count arithmetic.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Randomly removes outliers (or, when outliers are insufficient, inliers)
/// so that the achieved outlier fraction lands within one sample of
/// `target_ratio`. Kept rows preserve their original order; no point is
/// ever fabricated.
pub fn downsample_to_ratio(data: &Dataset, target_ratio: f64, seed: u64) -> Result<Dataset> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(CoreError::Param(format!(
            "target ratio {target_ratio} outside the open interval (0, 1)"
        )));
    }
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| CoreError::Protocol("downsampling requires a labeled dataset".into()))?;
    let outliers: Vec<usize> =
        (0..data.n()).filter(|&i| labels[i] == Label::Outlier).collect();
    let inliers: Vec<usize> =
        (0..data.n()).filter(|&i| labels[i] == Label::Inlier).collect();
    if outliers.is_empty() || inliers.is_empty() {
        return Err(CoreError::Protocol("downsampling requires both classes present".into()));
    }

    let n_out = outliers.len();
    let n_in = inliers.len();

    // Solve count = round(ratio * n_final) for the kept class, preferring to
    // keep every inlier and thin the outliers.
    let want_out = round_half_up(target_ratio * n_in as f64 / (1.0 - target_ratio));
    let (keep_in, keep_out) = if want_out <= n_out {
        (n_in, want_out)
    } else {
        let want_in = round_half_up(n_out as f64 * (1.0 - target_ratio) / target_ratio);
        (want_in.min(n_in), n_out)
    };
    if keep_in == 0 || keep_out == 0 {
        return Err(CoreError::Protocol(format!(
            "target ratio {target_ratio} rounds a kept class to zero \
             ({n_in} inliers, {n_out} outliers available)"
        )));
    }
    let total = keep_in + keep_out;
    let achieved = keep_out as f64 / total as f64;
    if (achieved - target_ratio).abs() > 1.0 / total as f64 + 1e-12 {
        return Err(CoreError::Protocol(format!(
            "cannot reach ratio {target_ratio} from {n_in} inliers and {n_out} outliers \
             (closest achievable is {achieved})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<usize> = Vec::with_capacity(total);
    kept.extend(sample_without_replacement(&inliers, keep_in, &mut rng));
    kept.extend(sample_without_replacement(&outliers, keep_out, &mut rng));
    kept.sort_unstable();

    let points = data.points.select(&kept);
    let labels = kept.iter().map(|&i| labels[i]).collect();
    Dataset::new(points, Some(labels), data.name.clone(), Some(seed))
}

/// Draws `amount` elements of `pool` uniformly without replacement.
fn sample_without_replacement(pool: &[usize], amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if amount >= pool.len() {
        return pool.to_vec();
    }
    let picked = rand::seq::index::sample(rng, pool.len(), amount);
    picked.iter().map(|i| pool[i]).collect()
}
