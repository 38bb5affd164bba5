//! Median-of-means kernel density estimation.
//!
//! The sample is split once into S nearly equal blocks by chopping a
//! random permutation into contiguous chunks. Each block carries its own
//! plain KDE (uniform weights, the block's true size in the denominator),
//! and the estimate at a query point is the median of the S block values,
//! averaged across the two central order statistics when S is even. The
//! raw median is not guaranteed to integrate to one, so a fitted estimate
//! can carry a normalization constant obtained by grid quadrature.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Points;
use crate::density::WeightedDensityEstimate;
use crate::error::{CoreError, Result};
use crate::grid::{integrate_on_grid, EvaluationGrid};
use crate::kernel::KernelSpec;

/// A partition of {0..n−1} into S disjoint blocks whose sizes differ by
/// at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    assignments: Vec<usize>,
    block_sizes: Vec<usize>,
    seed: u64,
}

impl BlockPartition {
    /// Number of data points covered.
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    /// Number of blocks S.
    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Block index of each data point, in {0..S−1}.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Size of each block.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Seed the partition was drawn with (zero for reconstructed ones).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ascending data indices of block `block`.
    pub fn block_indices(&self, block: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == block)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rebuilds a partition from stored assignments, re-validating the
    /// coverage and balance invariants.
    pub fn from_assignments(assignments: Vec<usize>, num_blocks: usize, seed: u64) -> Result<Self> {
        if num_blocks == 0 || num_blocks > assignments.len() {
            return Err(CoreError::Param(format!(
                "need 1 <= blocks <= n, got {} blocks for {} points",
                num_blocks,
                assignments.len()
            )));
        }
        let mut block_sizes = alloc::vec![0usize; num_blocks];
        for (i, &b) in assignments.iter().enumerate() {
            if b >= num_blocks {
                return Err(CoreError::Param(format!(
                    "point {i} assigned to block {b}, but there are only {num_blocks} blocks"
                )));
            }
            block_sizes[b] += 1;
        }
        let smallest = *block_sizes.iter().min().expect("at least one block");
        let largest = *block_sizes.iter().max().expect("at least one block");
        if smallest == 0 {
            return Err(CoreError::Param("a block is empty".into()));
        }
        if largest - smallest > 1 {
            return Err(CoreError::Param(format!(
                "block sizes range from {smallest} to {largest}, expected a spread of at most 1"
            )));
        }
        Ok(Self { assignments, block_sizes, seed })
    }
}

/// Draws a uniformly random partition of {0..n−1} into `num_blocks`
/// contiguous chunks of a shuffled permutation. Deterministic in `seed`.
pub fn partition_blocks(n: usize, num_blocks: usize, seed: u64) -> Result<BlockPartition> {
    if num_blocks == 0 || num_blocks > n {
        return Err(CoreError::Param(format!(
            "need 1 <= blocks <= n, got {num_blocks} blocks for {n} points"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / num_blocks;
    let remainder = n % num_blocks;
    let mut assignments = alloc::vec![0usize; n];
    let mut block_sizes = Vec::with_capacity(num_blocks);
    let mut cursor = 0;
    for block in 0..num_blocks {
        let size = base + usize::from(block < remainder);
        for &idx in &order[cursor..cursor + size] {
            assignments[idx] = block;
        }
        block_sizes.push(size);
        cursor += size;
    }
    Ok(BlockPartition { assignments, block_sizes, seed })
}

/// Median by selection; averages the two central order statistics when
/// the count is even.
fn median_in_place(values: &mut [f64]) -> f64 {
    let s = values.len();
    debug_assert!(s > 0);
    let (below, upper_mid, _) = values
        .select_nth_unstable_by(s / 2, |a, b| a.partial_cmp(b).expect("finite block values"));
    if s % 2 == 1 {
        *upper_mid
    } else {
        let lower_mid = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_mid + *upper_mid)
    }
}

/// A fitted median-of-means density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MomEstimate {
    points: Points,
    partition: BlockPartition,
    bandwidth: f64,
    kernel: KernelSpec,
    normalization: Option<f64>,
    block_kdes: Vec<WeightedDensityEstimate>,
}

impl MomEstimate {
    /// Fits the raw (unnormalized) estimate: draws the partition from
    /// `seed` and prepares one KDE per block.
    pub fn fit_raw(
        points: Points,
        num_blocks: usize,
        bandwidth: f64,
        kernel: KernelSpec,
        seed: u64,
    ) -> Result<Self> {
        let partition = partition_blocks(points.n(), num_blocks, seed)?;
        Self::from_parts(points, partition, bandwidth, kernel, None)
    }

    /// Fits the estimate and sets the normalization constant to the grid
    /// integral of the raw median, so evaluations integrate to one on
    /// that grid.
    pub fn fit_normalized(
        points: Points,
        num_blocks: usize,
        bandwidth: f64,
        kernel: KernelSpec,
        seed: u64,
        grid: &EvaluationGrid,
    ) -> Result<Self> {
        let mut fit = Self::fit_raw(points, num_blocks, bandwidth, kernel, seed)?;
        let raw = fit.evaluate_on_grid(grid)?;
        let z = integrate_on_grid(grid, &raw)?;
        if !z.is_finite() || z <= 0.0 {
            return Err(CoreError::Numeric(format!(
                "cannot normalize: grid integral of the raw median is {z}"
            )));
        }
        fit.normalization = Some(z);
        Ok(fit)
    }

    /// Assembles an estimate from a stored partition, re-validating every
    /// invariant. `normalization`, if given, must be positive and finite.
    pub fn from_parts(
        points: Points,
        partition: BlockPartition,
        bandwidth: f64,
        kernel: KernelSpec,
        normalization: Option<f64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::EmptyModel);
        }
        if partition.n() != points.n() {
            return Err(CoreError::Shape(format!(
                "partition covers {} points but the data has {}",
                partition.n(),
                points.n()
            )));
        }
        if let Some(z) = normalization {
            if !(z.is_finite() && z > 0.0) {
                return Err(CoreError::Param(format!(
                    "normalization constant must be positive and finite, got {z}"
                )));
            }
        }
        let block_kdes = (0..partition.num_blocks())
            .map(|block| {
                let members = partition.block_indices(block);
                WeightedDensityEstimate::uniform(points.select(&members), bandwidth, kernel)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, partition, bandwidth, kernel, normalization, block_kdes })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// The grid integral the output is divided by, if fitted normalized.
    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }

    /// The S block KDE values at one query point, in block order.
    pub fn block_values(&self, query: &[f64]) -> Result<Vec<f64>> {
        self.block_kdes.iter().map(|kde| kde.evaluate_at(query)).collect()
    }

    /// Median of the block KDE values at one query point, divided by the
    /// normalization constant when one is set.
    pub fn evaluate_at(&self, query: &[f64]) -> Result<f64> {
        let mut values = self.block_values(query)?;
        let median = median_in_place(&mut values);
        Ok(match self.normalization {
            Some(z) => median / z,
            None => median,
        })
    }

    /// Evaluation at every query row.
    pub fn evaluate(&self, queries: &Points) -> Result<Vec<f64>> {
        if queries.dim() != self.points.dim() && !queries.is_empty() {
            return Err(CoreError::Shape(format!(
                "queries of dimension {} against data of dimension {}",
                queries.dim(),
                self.points.dim()
            )));
        }
        queries.iter_rows().map(|q| self.evaluate_at(q)).collect()
    }

    /// Evaluation at every node of `grid`, in the grid's node order.
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
            out.push(self.evaluate_at(&node)?);
        }
        Ok(out)
    }
}

/// Probability bound exp(−2Δ²S) on the median estimate leaving the clean
/// concentration band, with Δ = 1/(2+δ) − |outliers|/S. Requires the
/// strict majority condition S > (2+δ)·|outliers|.
pub fn mom_failure_probability(num_blocks: usize, n_outliers: usize, delta: f64) -> Result<f64> {
    if num_blocks == 0 {
        return Err(CoreError::Param("need at least one block".into()));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(CoreError::Param(format!("delta must be positive and finite, got {delta}")));
    }
    let s = num_blocks as f64;
    let o = n_outliers as f64;
    if s <= (2.0 + delta) * o {
        return Err(CoreError::Param(format!(
            "requires S > (2+delta)*outliers, got S={num_blocks} with (2+{delta})*{n_outliers} = {}",
            (2.0 + delta) * o
        )));
    }
    let gap = 1.0 / (2.0 + delta) - o / s;
    Ok((-2.0 * gap * gap * s).exp())
}

/// Bandwidth (S·ln n / n)^{1/(2α+d)} balancing the bias and deviation
/// terms of the median estimate's error bound.
pub fn rate_optimal_bandwidth(n: usize, num_blocks: usize, alpha: f64, dim: usize) -> Result<f64> {
    if n < 2 {
        return Err(CoreError::Param(format!("need n >= 2 samples, got {n}")));
    }
    if num_blocks == 0 || num_blocks > n {
        return Err(CoreError::Param(format!(
            "need 1 <= blocks <= n, got {num_blocks} blocks for {n} points"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CoreError::Param(format!("smoothness must lie in (0, 1], got {alpha}")));
    }
    if dim == 0 {
        return Err(CoreError::Param("dimension must be at least 1".into()));
    }
    let base = num_blocks as f64 * (n as f64).ln() / n as f64;
    Ok(base.powf(1.0 / (2.0 * alpha + dim as f64)))
}
