//! Seeded experiment sweeps over contamination ratios.
//!
//! A sweep crosses outlier ratios with repetitions. Each (ratio,
//! repetition) cell derives its own child seed, builds a dataset, selects
//! one bandwidth shared by every estimator, fits each requested method,
//! and scores each requested metric, emitting one row per (method,
//! metric) pair: either a value row or an error row explaining the
//! absence. The whole output is a pure function of the configuration:
//! cells run in parallel but are reassembled in (ratio, repetition)
//! order, and timing columns stay zero unless explicitly requested, so
//! reruns and thread counts cannot change a byte of the result files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use momkde_core::bandwidth::{default_bandwidth_grid, select_bandwidth_cv, DEFAULT_FOLDS};
use momkde_core::data::downsample_to_ratio;
use momkde_core::metrics::{auc, js_divergence, kl_divergence};
use momkde_core::seed::derive_seed;
use momkde_core::synth::{contaminated_sample, inlier_density};
use momkde_core::{
    build_grid, fit_rkde_hampel, fit_spkde, normalize_density, Dataset, EvaluationGrid,
    KernelFamily, KernelSpec, MomEstimate, OutlierScheme, Points, WeightedDensityEstimate,
};

use crate::io::load_csv_dataset;
use crate::model::DensityModel;
use crate::{Error, Result};

/// Grid nodes per axis for divergence quadrature, by dimension.
const DIVERGENCE_GRID_NODES: [usize; 3] = [2001, 301, 101];
/// Grid padding around the data, in bandwidths.
const DIVERGENCE_GRID_PADDING: f64 = 5.0;
/// Candidate count for the oracle block-count grid.
const ORACLE_GRID_SIZE: usize = 20;

/// Nodes per axis of the default density grid for `dim`-dimensional
/// data; `None` beyond three dimensions, where dense grids stop being
/// tractable.
pub fn default_grid_nodes(dim: usize) -> Option<usize> {
    dim.checked_sub(1).and_then(|i| DIVERGENCE_GRID_NODES.get(i)).copied()
}

/// The estimators a sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain kernel density estimate.
    Kde,
    /// Median-of-means KDE.
    Mom,
    /// Robust KDE via iteratively reweighted least squares.
    Rkde,
    /// Scaled-projection KDE.
    Spkde,
}

impl Method {
    /// Name used in CLI flags and result tables.
    pub fn name(self) -> &'static str {
        match self {
            Method::Kde => "kde",
            Method::Mom => "mom",
            Method::Rkde => "rkde",
            Method::Spkde => "spkde",
        }
    }
}

/// The scores a sweep can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// KL divergence from the true density to the estimate.
    KlFwd,
    /// KL divergence from the estimate to the true density.
    KlRev,
    /// Jensen-Shannon divergence between estimate and truth, in bits.
    Js,
    /// Area under the ROC curve of the low-density anomaly detector.
    Auc,
}

impl Metric {
    /// Name used in configs and result tables.
    pub fn name(self) -> &'static str {
        match self {
            Metric::KlFwd => "kl_fwd",
            Metric::KlRev => "kl_rev",
            Metric::Js => "js",
            Metric::Auc => "auc",
        }
    }

    /// Whether the metric compares densities on a grid (and therefore
    /// needs a known true density).
    pub fn is_divergence(self) -> bool {
        !matches!(self, Metric::Auc)
    }
}

/// Where a sweep's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Generated 1-D mixture inliers plus scheme outliers.
    Synthetic { scheme: String },
    /// A labeled CSV file, downsampled to each requested ratio.
    Csv {
        path: String,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default)]
        outlier_label_value: f64,
    },
}

fn default_label_column() -> String {
    "label".into()
}

/// How the shared bandwidth is chosen in each cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// Pseudo-likelihood cross-validation on the cell's data.
    #[default]
    Cv,
    /// A fixed value used everywhere.
    Fixed { h: f64 },
}

/// How the median-of-means block count is chosen in each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockPolicy {
    /// Scan a grid of counts and keep the one closest to the true
    /// density (synthetic runs only).
    #[default]
    Oracle,
    /// A fixed block count used everywhere.
    Fixed { s: usize },
}

/// Full description of a sweep; serializable as JSON field-for-field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Data source for every cell.
    pub dataset: DatasetSource,
    /// Estimators to fit, in reporting order.
    pub methods: Vec<Method>,
    /// Contamination ratios to sweep, each in (0, 1).
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    /// Repetitions per ratio; defaults to 10 for synthetic data and 50
    /// for CSV data when omitted.
    #[serde(default)]
    pub repetitions: Option<usize>,
    /// Inlier count for synthetic cells.
    #[serde(default = "default_n_inliers")]
    pub n_inliers: usize,
    /// Scores to record, in reporting order.
    pub metrics: Vec<Metric>,
    /// Root seed; the entire output is a pure function of the config.
    pub base_seed: u64,
    /// Bandwidth selection policy.
    #[serde(default)]
    pub bandwidth: BandwidthPolicy,
    /// Block-count policy for the median-of-means estimator.
    #[serde(default)]
    pub blocks: BlockPolicy,
    /// Record wall-clock fit times for the iterative estimators. Off by
    /// default so result files are byte-identical across machines.
    #[serde(default)]
    pub record_timings: bool,
}

fn default_ratios() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 0.05).collect()
}

fn default_n_inliers() -> usize {
    1000
}

/// One line of the results table; `value` is `None` for error rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// Name of the dataset the cell ran on.
    pub dataset: String,
    /// Estimator name.
    pub method: &'static str,
    /// Requested contamination ratio.
    pub ratio: f64,
    /// Zero-based repetition index.
    pub repetition: usize,
    /// Metric name.
    pub metric: &'static str,
    /// Score; `None` when the cell failed (see `error`). KL may be +∞.
    pub value: Option<f64>,
    /// Child seed the cell ran under.
    pub seed: u64,
    /// Shared bandwidth; `None` when selection itself failed.
    pub h: Option<f64>,
    /// Block count, for the median-of-means rows.
    pub blocks: Option<usize>,
    /// Fit wall time in milliseconds; zero unless timings were requested
    /// and the method actually iterates.
    pub wall_time_ms: f64,
    /// Failure description for error rows, empty otherwise.
    pub error: String,
}

/// A mean/std summary of one (method, metric, ratio) group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    /// Estimator name.
    pub method: &'static str,
    /// Metric name.
    pub metric: &'static str,
    /// Requested contamination ratio.
    pub ratio: f64,
    /// Number of value rows aggregated.
    pub count: usize,
    /// Mean of the values; `None` when the group has no value rows.
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` for fewer than two values.
    pub std: Option<f64>,
}

enum SourceData {
    Synthetic(OutlierScheme),
    Csv(Dataset),
}

struct ResolvedExperiment {
    source: SourceData,
    methods: Vec<Method>,
    metrics: Vec<Metric>,
    ratios: Vec<f64>,
    repetitions: usize,
    n_inliers: usize,
    base_seed: u64,
    bandwidth: BandwidthPolicy,
    blocks: BlockPolicy,
    record_timings: bool,
}

impl ExperimentConfig {
    /// Repetition count after applying the per-source default.
    pub fn resolved_repetitions(&self) -> usize {
        self.repetitions.unwrap_or(match self.dataset {
            DatasetSource::Synthetic { .. } => 10,
            DatasetSource::Csv { .. } => 50,
        })
    }

    /// A copy with every defaulted field made explicit, for the sidecar
    /// config written next to the results.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut config = self.clone();
        config.repetitions = Some(self.resolved_repetitions());
        config
    }

    fn validate_lists(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("duplicate method {:?}", m.name())));
            }
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return Err(Error::Config(format!("duplicate metric {:?}", m.name())));
            }
        }
        if self.ratios.is_empty() {
            return Err(Error::Config("at least one ratio is required".into()));
        }
        for &r in &self.ratios {
            if !(r.is_finite() && 0.0 < r && r < 1.0) {
                return Err(Error::Config(format!(
                    "ratios must lie strictly inside (0, 1), got {r}"
                )));
            }
        }
        for (i, r) in self.ratios.iter().enumerate() {
            if self.ratios[..i].contains(r) {
                return Err(Error::Config(format!("duplicate ratio {r}")));
            }
        }
        if self.resolved_repetitions() == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if let BandwidthPolicy::Fixed { h } = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!("fixed bandwidth must be positive, got {h}")));
            }
        }
        if let BlockPolicy::Fixed { s } = self.blocks {
            if s == 0 {
                return Err(Error::Config("fixed block count must be positive".into()));
            }
        }
        Ok(())
    }

    fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate_lists()?;
        let wants_divergence = self.metrics.iter().any(|m| m.is_divergence());
        let source = match &self.dataset {
            DatasetSource::Synthetic { scheme } => {
                let scheme: OutlierScheme = scheme
                    .parse()
                    .map_err(|e: momkde_core::CoreError| Error::Config(e.to_string()))?;
                if self.n_inliers == 0 {
                    return Err(Error::Config("n_inliers must be positive".into()));
                }
                SourceData::Synthetic(scheme)
            }
            DatasetSource::Csv { path, label_column, outlier_label_value } => {
                if wants_divergence {
                    return Err(Error::Config(
                        "divergence metrics need a known true density; CSV data supports only \
                         auc"
                            .into(),
                    ));
                }
                if self.methods.contains(&Method::Mom)
                    && matches!(self.blocks, BlockPolicy::Oracle)
                {
                    return Err(Error::Config(
                        "the oracle block policy needs a known true density; use a fixed block \
                         count with CSV data"
                            .into(),
                    ));
                }
                let data = load_csv_dataset(path, Some(label_column), *outlier_label_value)?;
                if data.labels.is_none() {
                    return Err(Error::Config(format!(
                        "{path}: CSV experiments need a label column"
                    )));
                }
                SourceData::Csv(data)
            }
        };
        Ok(ResolvedExperiment {
            source,
            methods: self.methods.clone(),
            metrics: self.metrics.clone(),
            ratios: self.ratios.clone(),
            repetitions: self.resolved_repetitions(),
            n_inliers: self.n_inliers,
            base_seed: self.base_seed,
            bandwidth: self.bandwidth,
            blocks: self.blocks,
            record_timings: self.record_timings,
        })
    }
}

/// The outcome of an oracle scan over block counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSelection {
    /// The chosen block count: smallest among the lowest-divergence
    /// candidates.
    pub blocks: usize,
    /// Scanned block counts, ascending, duplicates removed.
    pub candidates: Vec<usize>,
    /// Jensen-Shannon divergence against the true density, one per
    /// candidate.
    pub scores: Vec<f64>,
}

/// Scans evenly spaced block counts between 1 and 2·`n_outliers`+1 and
/// returns the one whose normalized median-of-means estimate is closest
/// to `true_density` (which must be normalized on `grid`) in
/// Jensen-Shannon divergence. Ties go to the smallest count.
pub fn oracle_select_blocks(
    points: &Points,
    true_density: &[f64],
    grid: &EvaluationGrid,
    h: f64,
    kernel: &KernelSpec,
    n_outliers: usize,
    seed: u64,
) -> Result<OracleSelection> {
    let top = 2 * n_outliers;
    let mut candidates: Vec<usize> = Vec::with_capacity(ORACLE_GRID_SIZE);
    for i in 0..ORACLE_GRID_SIZE {
        let raw = 1.0 + (top * i) as f64 / (ORACLE_GRID_SIZE - 1) as f64;
        let s = (raw + 0.5).floor() as usize;
        if s <= points.n() && candidates.last() != Some(&s) {
            candidates.push(s);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Config(format!(
            "no feasible block count below n = {} for {n_outliers} outliers",
            points.n()
        )));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for &s in &candidates {
        let fit = MomEstimate::fit_raw(
            points.clone(),
            s,
            h,
            kernel.clone(),
            derive_seed(seed, &[s as u64]),
        )?;
        let raw = fit.evaluate_on_grid(grid)?;
        let (density, _) = normalize_density(grid, &raw)?;
        scores.push(js_divergence(&density, true_density, grid)?);
    }
    let mut best = 0;
    for (i, &score) in scores.iter().enumerate() {
        if score < scores[best] {
            best = i;
        }
    }
    Ok(OracleSelection { blocks: candidates[best], candidates, scores })
}

fn half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

struct CellOutcome {
    fit: DensityModel,
    blocks: Option<usize>,
    fit_ms: f64,
}

fn fit_method(
    exp: &ResolvedExperiment,
    method: Method,
    data: &Dataset,
    h: f64,
    truth: Option<&(EvaluationGrid, Vec<f64>)>,
    child: u64,
) -> Result<CellOutcome> {
    let kernel = KernelSpec::new(KernelFamily::Gaussian, data.dim())?;
    let points = data.points.clone();
    match method {
        Method::Kde => Ok(CellOutcome {
            fit: DensityModel::Weighted(WeightedDensityEstimate::uniform(points, h, kernel)?),
            blocks: None,
            fit_ms: 0.0,
        }),
        Method::Mom => {
            let s = match exp.blocks {
                BlockPolicy::Fixed { s } => s,
                BlockPolicy::Oracle => {
                    let (grid, density) = truth.ok_or_else(|| {
                        Error::Config(
                            "oracle block selection needs a true density grid".into(),
                        )
                    })?;
                    let n_outliers = data.outlier_count().ok_or_else(|| {
                        Error::Config("oracle block selection needs labels".into())
                    })?;
                    oracle_select_blocks(
                        &points,
                        density,
                        grid,
                        h,
                        &kernel,
                        n_outliers,
                        derive_seed(child, &[5]),
                    )?
                    .blocks
                }
            };
            let fit =
                MomEstimate::fit_raw(points, s, h, kernel, derive_seed(child, &[4]))?;
            Ok(CellOutcome { fit: DensityModel::Mom(fit), blocks: Some(s), fit_ms: 0.0 })
        }
        Method::Rkde => {
            let start = Instant::now();
            let (fit, _) = fit_rkde_hampel(
                &points,
                h,
                &kernel,
                momkde_core::rkde::DEFAULT_TOL,
                momkde_core::rkde::DEFAULT_MAX_ITER,
            )?;
            let fit_ms = if exp.record_timings {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let estimate = WeightedDensityEstimate::new(points, fit.weights, h, kernel)?;
            Ok(CellOutcome { fit: DensityModel::Weighted(estimate), blocks: None, fit_ms })
        }
        Method::Spkde => {
            let eps = data
                .contamination()
                .ok_or_else(|| Error::Config("spkde needs labels for the true ratio".into()))?;
            let start = Instant::now();
            let fit = fit_spkde(
                &points,
                h,
                &kernel,
                eps,
                momkde_core::spkde::DEFAULT_TOL,
                momkde_core::spkde::DEFAULT_MAX_ITER,
            )?;
            let fit_ms = if exp.record_timings {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let estimate = WeightedDensityEstimate::new(points, fit.weights, h, kernel)?;
            Ok(CellOutcome { fit: DensityModel::Weighted(estimate), blocks: None, fit_ms })
        }
    }
}

struct RowSeed<'a> {
    dataset: String,
    ratio: f64,
    repetition: usize,
    seed: u64,
    h: Option<f64>,
    metrics: &'a [Metric],
}

impl RowSeed<'_> {
    fn error_rows(&self, method: Method, message: &str) -> Vec<ResultRow> {
        self.metrics
            .iter()
            .map(|metric| ResultRow {
                dataset: self.dataset.clone(),
                method: method.name(),
                ratio: self.ratio,
                repetition: self.repetition,
                metric: metric.name(),
                value: None,
                seed: self.seed,
                h: self.h,
                blocks: None,
                wall_time_ms: 0.0,
                error: message.into(),
            })
            .collect()
    }
}

fn run_cell(exp: &ResolvedExperiment, ratio_idx: usize, repetition: usize) -> Vec<ResultRow> {
    let ratio = exp.ratios[ratio_idx];
    let child = derive_seed(exp.base_seed, &[ratio_idx as u64, repetition as u64]);

    let data = match &exp.source {
        SourceData::Synthetic(scheme) => {
            let n_outliers = half_up(ratio * exp.n_inliers as f64);
            contaminated_sample(*scheme, exp.n_inliers, n_outliers, child)
        }
        SourceData::Csv(base) => match downsample_to_ratio(base, ratio, child) {
            Ok(data) => data,
            Err(e) => {
                let seed = RowSeed {
                    dataset: base.name.clone(),
                    ratio,
                    repetition,
                    seed: child,
                    h: None,
                    metrics: &exp.metrics,
                };
                return exp
                    .methods
                    .iter()
                    .flat_map(|&m| seed.error_rows(m, &e.to_string()))
                    .collect();
            }
        },
    };

    let mut seed = RowSeed {
        dataset: data.name.clone(),
        ratio,
        repetition,
        seed: child,
        h: None,
        metrics: &exp.metrics,
    };

    let h = match exp.bandwidth {
        BandwidthPolicy::Fixed { h } => Ok(h),
        BandwidthPolicy::Cv => default_bandwidth_grid(&data.points).and_then(|grid| {
            let kernel = KernelSpec::new(KernelFamily::Gaussian, data.dim())?;
            select_bandwidth_cv(&data.points, DEFAULT_FOLDS, &grid, kernel, derive_seed(child, &[3]))
                .map(|(h, _)| h)
        }),
    };
    let h = match h {
        Ok(h) => h,
        Err(e) => {
            let message = format!("bandwidth selection failed: {e}");
            return exp.methods.iter().flat_map(|&m| seed.error_rows(m, &message)).collect();
        }
    };
    seed.h = Some(h);

    // Divergence metrics compare normalized densities against the true
    // inlier mixture on a shared grid.
    let wants_divergence = exp.metrics.iter().any(|m| m.is_divergence());
    let truth: Option<std::result::Result<(EvaluationGrid, Vec<f64>), String>> =
        if wants_divergence {
            Some(build_truth_grid(&data.points, h))
        } else {
            None
        };

    let mut rows = Vec::with_capacity(exp.methods.len() * exp.metrics.len());
    for &method in &exp.methods {
        let truth_ref = match &truth {
            Some(Ok(pair)) => Some(pair),
            _ => None,
        };
        let outcome = match fit_method(exp, method, &data, h, truth_ref, child) {
            Ok(outcome) => outcome,
            Err(e) => {
                rows.extend(seed.error_rows(method, &format!("fit failed: {e}")));
                continue;
            }
        };
        let normalized = truth_ref.and_then(|(grid, _)| {
            match outcome
                .fit
                .evaluate_on_grid(grid)
                .and_then(|raw| Ok(normalize_density(grid, &raw)?))
            {
                Ok((density, _)) => Some(Ok(density)),
                Err(e) => Some(Err(format!("grid evaluation failed: {e}"))),
            }
        });
        for &metric in &exp.metrics {
            let value = match metric {
                Metric::Auc => data
                    .labels
                    .as_deref()
                    .ok_or_else(|| "auc needs labels".to_string())
                    .and_then(|labels| {
                        let scores = outcome
                            .fit
                            .evaluate(&data.points)
                            .map_err(|e| e.to_string())?;
                        auc(&scores, labels).map_err(|e| e.to_string())
                    }),
                divergence => match (&truth, &normalized) {
                    (Some(Err(message)), _) => Err(message.clone()),
                    (_, Some(Err(message))) => Err(message.clone()),
                    (Some(Ok((grid, target))), Some(Ok(density))) => {
                        let result = match divergence {
                            Metric::KlFwd => kl_divergence(target, density, grid),
                            Metric::KlRev => kl_divergence(density, target, grid),
                            Metric::Js => js_divergence(density, target, grid),
                            Metric::Auc => unreachable!("handled above"),
                        };
                        result.map_err(|e| e.to_string())
                    }
                    _ => Err("no true density available".into()),
                },
            };
            let (value, error) = match value {
                Ok(v) => (Some(v), String::new()),
                Err(message) => (None, message),
            };
            rows.push(ResultRow {
                dataset: seed.dataset.clone(),
                method: method.name(),
                ratio,
                repetition,
                metric: metric.name(),
                value,
                seed: child,
                h: Some(h),
                blocks: outcome.blocks,
                wall_time_ms: outcome.fit_ms,
                error,
            });
        }
    }
    rows
}

fn build_truth_grid(
    points: &Points,
    h: f64,
) -> std::result::Result<(EvaluationGrid, Vec<f64>), String> {
    let d = points.dim();
    if d != 1 {
        return Err(format!(
            "divergence metrics need the 1-D synthetic truth, got {d}-dimensional data"
        ));
    }
    let nodes = DIVERGENCE_GRID_NODES[d - 1];
    let built = build_grid(points, h, DIVERGENCE_GRID_PADDING, nodes)
        .map_err(|e| format!("grid construction failed: {e}"))?;
    let grid = built.grid;
    let mut truth = Vec::with_capacity(grid.num_nodes());
    let mut node = vec![0.0; 1];
    for flat in 0..grid.num_nodes() {
        grid.node(flat, &mut node);
        truth.push(inlier_density(node[0]));
    }
    let (normalized, _) =
        normalize_density(&grid, &truth).map_err(|e| format!("truth normalization: {e}"))?;
    Ok((grid, normalized))
}

/// Runs the sweep described by `config` and returns its rows, sorted by
/// (ratio index, repetition) with methods and metrics in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = config.resolve()?;
    let cells: Vec<(usize, usize)> = (0..exp.ratios.len())
        .flat_map(|ri| (0..exp.repetitions).map(move |rep| (ri, rep)))
        .collect();
    let mut keyed: Vec<(usize, Vec<ResultRow>)> = cells
        .par_iter()
        .map(|&(ri, rep)| (ri * exp.repetitions + rep, run_cell(&exp, ri, rep)))
        .collect();
    keyed.sort_by_key(|(key, _)| *key);
    Ok(keyed.into_iter().flat_map(|(_, rows)| rows).collect())
}

/// Summarizes value rows per (method, metric, ratio). Error rows are
/// excluded; a group containing +∞ reports infinite mean and std.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, &str, u64), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if let Some(value) = row.value {
            groups
                .entry((row.method, row.metric, row.ratio.to_bits()))
                .or_default()
                .push(value);
        }
    }
    groups
        .into_iter()
        .map(|((method, metric, ratio_bits), values)| {
            let count = values.len();
            let mean = values.iter().sum::<f64>() / count as f64;
            let std = if count >= 2 {
                let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                Some((ss / (count - 1) as f64).sqrt())
            } else {
                None
            };
            AggregateRow {
                method: match_method_name(method),
                metric: match_metric_name(metric),
                ratio: f64::from_bits(ratio_bits),
                count,
                mean: Some(mean),
                std,
            }
        })
        .collect()
}

fn match_method_name(name: &str) -> &'static str {
    match name {
        "kde" => "kde",
        "mom" => "mom",
        "rkde" => "rkde",
        _ => "spkde",
    }
}

fn match_metric_name(name: &str) -> &'static str {
    match name {
        "kl_fwd" => "kl_fwd",
        "kl_rev" => "kl_rev",
        "js" => "js",
        _ => "auc",
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Writes `results.csv`, `aggregates.csv`, and the resolved `config.json`
/// into `out_dir`, creating it if needed. Returns the three paths.
pub fn emit_results(
    rows: &[ResultRow],
    config: &ExperimentConfig,
    out_dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf, PathBuf)> {
    if rows.is_empty() {
        return Err(Error::Config("refusing to emit an empty result set".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;

    let results_path = out_dir.join("results.csv");
    let mut writer = csv::Writer::from_path(&results_path)?;
    writer.write_record([
        "dataset",
        "method",
        "ratio",
        "repetition",
        "metric",
        "value",
        "seed",
        "h",
        "blocks",
        "wall_time_ms",
        "error",
    ])?;
    for row in rows {
        writer.write_record([
            row.dataset.clone(),
            row.method.into(),
            format!("{}", row.ratio),
            format!("{}", row.repetition),
            row.metric.into(),
            fmt_opt(row.value),
            format!("{}", row.seed),
            fmt_opt(row.h),
            row.blocks.map(|s| format!("{s}")).unwrap_or_default(),
            format!("{}", row.wall_time_ms),
            row.error.clone(),
        ])?;
    }
    writer.flush()?;

    let aggregates_path = out_dir.join("aggregates.csv");
    let mut writer = csv::Writer::from_path(&aggregates_path)?;
    writer.write_record(["method", "metric", "ratio", "count", "mean", "std"])?;
    for row in aggregate(rows) {
        writer.write_record([
            row.method.into(),
            row.metric.into(),
            format!("{}", row.ratio),
            format!("{}", row.count),
            fmt_opt(row.mean),
            fmt_opt(row.std),
        ])?;
    }
    writer.flush()?;

    let config_path = out_dir.join("config.json");
    let mut text = serde_json::to_string_pretty(&config.resolved())?;
    text.push('\n');
    std::fs::write(&config_path, text)?;

    Ok((results_path, aggregates_path, config_path))
}
