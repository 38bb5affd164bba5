//! JSON persistence of fitted density models.
//!
//! A saved model is self-contained: the kernel, the bandwidth, the fitted
//! parameters (block partition or point weights), and the training points
//! either inline or as a path to a CSV file resolved relative to the model
//! file. Loading re-validates every invariant through the same
//! constructors used when fitting, so a hand-edited file cannot smuggle an
//! inconsistent model past the checks.

use std::path::{Path, PathBuf};

use momkde_core::mom::BlockPartition;
use momkde_core::{KernelSpec, MomEstimate, Points, WeightedDensityEstimate};
use serde::{Deserialize, Serialize};

use crate::io::load_points_csv;
use crate::{Error, Result};

/// Where a model's training points live.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum PointsSource {
    /// Row-major coordinates stored in the model file itself.
    Inline { dim: usize, values: Vec<f64> },
    /// A CSV file of points, relative paths resolved against the model
    /// file's directory.
    Path { path: String },
}

impl PointsSource {
    /// Captures points inline.
    pub fn inline(points: &Points) -> Self {
        PointsSource::Inline { dim: points.dim(), values: points.values().to_vec() }
    }

    fn resolve(&self, base_dir: &Path) -> Result<Points> {
        match self {
            PointsSource::Inline { dim, values } => Ok(Points::new(values.clone(), *dim)?),
            PointsSource::Path { path } => {
                let raw = PathBuf::from(path);
                let full = if raw.is_absolute() { raw } else { base_dir.join(raw) };
                load_points_csv(full)
            }
        }
    }
}

/// A fitted model in its serialized form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum SavedModel {
    /// Plain KDE: uniform weights over the training points.
    Kde { kernel: String, bandwidth: f64, data: PointsSource },
    /// Median-of-means KDE: a stored block partition and an optional
    /// normalization constant.
    Mom {
        kernel: String,
        bandwidth: f64,
        data: PointsSource,
        num_blocks: usize,
        assignments: Vec<usize>,
        partition_seed: u64,
        normalization: Option<f64>,
    },
    /// Robust KDE: the weights found by iterative reweighting.
    Rkde { kernel: String, bandwidth: f64, data: PointsSource, weights: Vec<f64> },
    /// Scaled-projection KDE: the weights found by projected gradient
    /// descent and the decontamination scale they were fitted with.
    Spkde { kernel: String, bandwidth: f64, data: PointsSource, weights: Vec<f64>, beta: f64 },
}

impl SavedModel {
    /// Captures a median-of-means estimate with its points inline.
    pub fn from_mom(fit: &MomEstimate) -> Self {
        SavedModel::Mom {
            kernel: fit.kernel().family().name().into(),
            bandwidth: fit.bandwidth(),
            data: PointsSource::inline(fit.points()),
            num_blocks: fit.partition().num_blocks(),
            assignments: fit.partition().assignments().to_vec(),
            partition_seed: fit.partition().seed(),
            normalization: fit.normalization(),
        }
    }

    /// The method name used in CLI flags and result tables.
    pub fn method(&self) -> &'static str {
        match self {
            SavedModel::Kde { .. } => "kde",
            SavedModel::Mom { .. } => "mom",
            SavedModel::Rkde { .. } => "rkde",
            SavedModel::Spkde { .. } => "spkde",
        }
    }

    /// Rebuilds the runnable model, re-validating every invariant.
    /// `base_dir` anchors relative data paths.
    pub fn instantiate(&self, base_dir: &Path) -> Result<LoadedModel> {
        let (kernel_name, bandwidth, data) = match self {
            SavedModel::Kde { kernel, bandwidth, data }
            | SavedModel::Rkde { kernel, bandwidth, data, .. }
            | SavedModel::Spkde { kernel, bandwidth, data, .. }
            | SavedModel::Mom { kernel, bandwidth, data, .. } => (kernel, *bandwidth, data),
        };
        let points = data.resolve(base_dir)?;
        let family = kernel_name
            .parse()
            .map_err(|e: momkde_core::CoreError| Error::Schema(e.to_string()))?;
        let kernel = KernelSpec::new(family, points.dim())?;

        let density = match self {
            SavedModel::Kde { .. } => DensityModel::Weighted(WeightedDensityEstimate::uniform(
                points, bandwidth, kernel,
            )?),
            SavedModel::Rkde { weights, .. } | SavedModel::Spkde { weights, .. } => {
                DensityModel::Weighted(WeightedDensityEstimate::new(
                    points,
                    weights.clone(),
                    bandwidth,
                    kernel,
                )?)
            }
            SavedModel::Mom { num_blocks, assignments, partition_seed, normalization, .. } => {
                let partition = BlockPartition::from_assignments(
                    assignments.clone(),
                    *num_blocks,
                    *partition_seed,
                )?;
                DensityModel::Mom(MomEstimate::from_parts(
                    points,
                    partition,
                    bandwidth,
                    kernel,
                    *normalization,
                )?)
            }
        };
        Ok(LoadedModel { method: self.method(), density })
    }
}

/// A runnable model rebuilt from its serialized form.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    /// Method name for reporting.
    pub method: &'static str,
    /// The density estimate itself.
    pub density: DensityModel,
}

/// The two evaluation shapes a model can take.
#[derive(Debug, Clone)]
pub enum DensityModel {
    /// Pointwise median over block densities.
    Mom(MomEstimate),
    /// A weighted kernel mixture (plain, robust, or scaled-projection).
    Weighted(WeightedDensityEstimate),
}

impl DensityModel {
    /// Evaluates the density at each query point.
    pub fn evaluate(&self, queries: &Points) -> Result<Vec<f64>> {
        match self {
            DensityModel::Mom(fit) => Ok(fit.evaluate(queries)?),
            DensityModel::Weighted(fit) => Ok(fit.evaluate(queries)?),
        }
    }

    /// Evaluates the density at every node of a grid, in flat node order.
    pub fn evaluate_on_grid(&self, grid: &momkde_core::EvaluationGrid) -> Result<Vec<f64>> {
        match self {
            DensityModel::Mom(fit) => Ok(fit.evaluate_on_grid(grid)?),
            DensityModel::Weighted(fit) => Ok(fit.evaluate_on_grid(grid)?),
        }
    }
}

impl LoadedModel {
    /// Evaluates the density at each query point.
    pub fn evaluate(&self, queries: &Points) -> Result<Vec<f64>> {
        self.density.evaluate(queries)
    }
}

/// Writes a model as pretty-printed JSON.
pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a model back; use [`SavedModel::instantiate`] to run it.
pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
