//! Command-line surface: dataset generation, bandwidth selection, model
//! fitting, query scoring, and experiment sweeps.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use momkde_core::bandwidth::{
    default_bandwidth_grid, select_bandwidth_cv, DEFAULT_FOLDS, DEFAULT_GRID_SIZE,
};
use momkde_core::gram::Gram;
use momkde_core::rkde::{fit_rkde, fit_rkde_hampel, rkhs_distances, RobustLoss};
use momkde_core::seed::derive_seed;
use momkde_core::spkde::fit_spkde;
use momkde_core::synth::contaminated_sample;
use momkde_core::{
    build_grid, KernelFamily, KernelSpec, MomEstimate, OutlierScheme, Points,
    WeightedDensityEstimate,
};

use crate::harness::{default_grid_nodes, emit_results, run_experiment, ExperimentConfig};
use crate::io::{load_csv_dataset, load_points_csv, write_dataset_csv, write_scores_csv};
use crate::model::{load_model, save_model, PointsSource, SavedModel};
use crate::{Error, Result};

/// Robust kernel density estimation: median-of-means and friends.
#[derive(Debug, Parser)]
#[command(name = "momkde", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset and write it as CSV.
    Synth(SynthArgs),
    /// Select a bandwidth by k-fold cross-validation.
    Bandwidth(BandwidthArgs),
    /// Fit a density estimate and save it as a JSON model.
    Fit(FitArgs),
    /// Score query points against a saved model.
    Eval(EvalArgs),
    /// Run an experiment sweep described by a JSON config.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Outlier scheme: uniform, regular-gaussian, thin-gaussian, or
    /// adversarial-thin-gaussian.
    #[arg(long)]
    pub scheme: String,
    /// Number of inlier draws.
    #[arg(long, default_value_t = 1000)]
    pub n_inliers: usize,
    /// Number of outlier draws.
    #[arg(long, conflicts_with = "ratio")]
    pub n_outliers: Option<usize>,
    /// Outlier ratio relative to the inlier count; rounds half up.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Input CSV of points.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column to strip from the features before selection.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    /// Smallest candidate bandwidth; the grid is sized from the data
    /// when the endpoints are omitted.
    #[arg(long, requires = "grid_max")]
    pub grid_min: Option<f64>,
    /// Largest candidate bandwidth.
    #[arg(long, requires = "grid_min")]
    pub grid_max: Option<f64>,
    /// Number of log-spaced candidates.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Kernel family.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    /// RNG seed for the fold shuffle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional CSV dump of the per-candidate scores.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

/// Estimator selector shared by `fit` and the saved-model schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Kde,
    Mom,
    Rkde,
    Spkde,
}

/// Robust loss selector for the `rkde` method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    /// Three-part redescending loss with percentile knots.
    Hampel,
    /// Quadratic-then-linear loss; never fully discards a point.
    Huber,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Estimator to fit.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Input CSV of training points.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column to strip from the features before fitting.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Output path for the model JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Bandwidth; selected by cross-validation when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Kernel family.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    /// RNG seed (fold shuffle, block shuffle).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Block count for the median-of-means estimator.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Robust loss for the rkde method.
    #[arg(long, value_enum, default_value_t = LossArg::Hampel)]
    pub loss: LossArg,
    /// Huber threshold; defaults to the median of the uniform-weight
    /// feature-space distances, mirroring the Hampel knot placement.
    #[arg(long)]
    pub huber_a: Option<f64>,
    /// Convergence tolerance for the iterative fits.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap for the iterative fits.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Contamination fraction for the spkde method.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Reference the training CSV by path instead of inlining the
    /// points into the model file.
    #[arg(long, conflicts_with = "label_column")]
    pub link_data: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV of query points.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column to strip from the features before scoring.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Output CSV of per-query densities.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving results.csv, aggregates.csv, and the
    /// resolved config.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Runs a parsed command line to completion.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => run_synth(&args),
        Command::Bandwidth(args) => run_bandwidth(&args),
        Command::Fit(args) => run_fit(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Bench(args) => run_bench(&args),
    }
}

fn half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let scheme: OutlierScheme = args
        .scheme
        .parse()
        .map_err(|e: momkde_core::CoreError| Error::Config(e.to_string()))?;
    let n_outliers = match (args.n_outliers, args.ratio) {
        (Some(n), _) => n,
        (None, Some(r)) => {
            if !(r.is_finite() && 0.0 < r && r < 1.0) {
                return Err(Error::Config(format!(
                    "ratio must lie strictly inside (0, 1), got {r}"
                )));
            }
            half_up(r * args.n_inliers as f64)
        }
        (None, None) => 0,
    };
    let data = contaminated_sample(scheme, args.n_inliers, n_outliers, args.seed);
    write_dataset_csv(&args.output, &data)?;
    println!(
        "wrote {}: {} points ({} outliers)",
        args.output.display(),
        data.n(),
        n_outliers
    );
    Ok(())
}

fn load_features(path: &Path, label_column: Option<&str>) -> Result<Points> {
    match label_column {
        Some(column) => Ok(load_csv_dataset(path, Some(column), 0.0)?.points),
        None => load_points_csv(path),
    }
}

fn parse_kernel(name: &str, dim: usize) -> Result<KernelSpec> {
    let family: KernelFamily = name
        .parse()
        .map_err(|e: momkde_core::CoreError| Error::Config(e.to_string()))?;
    Ok(KernelSpec::new(family, dim)?)
}

fn explicit_bandwidth_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::Config(format!(
            "bandwidth grid needs 0 < min < max, got [{lo}, {hi}]"
        )));
    }
    if count < 2 {
        return Err(Error::Config(format!("bandwidth grid needs at least 2 candidates, got {count}")));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (log_lo + (log_hi - log_lo) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

fn run_bandwidth(args: &BandwidthArgs) -> Result<()> {
    let points = load_features(&args.input, args.label_column.as_deref())?;
    let kernel = parse_kernel(&args.kernel, points.dim())?;
    let grid = match (args.grid_min, args.grid_max) {
        (Some(lo), Some(hi)) => explicit_bandwidth_grid(lo, hi, args.grid_size)?,
        _ => default_bandwidth_grid(&points)?,
    };
    let (h, scores) =
        select_bandwidth_cv(&points, args.folds, &grid, kernel, derive_seed(args.seed, &[3]))?;
    if let Some(path) = &args.scores {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["h", "score"])?;
        for (candidate, score) in grid.iter().zip(&scores) {
            writer.write_record([format!("{candidate}"), format!("{score}")])?;
        }
        writer.flush()?;
    }
    println!("{h}");
    Ok(())
}

fn choose_bandwidth(points: &Points, kernel: &KernelSpec, args: &FitArgs) -> Result<f64> {
    match args.bandwidth {
        Some(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
            }
            Ok(h)
        }
        None => {
            let grid = default_bandwidth_grid(points)?;
            let (h, _) = select_bandwidth_cv(
                points,
                DEFAULT_FOLDS,
                &grid,
                kernel.clone(),
                derive_seed(args.seed, &[3]),
            )?;
            Ok(h)
        }
    }
}

fn huber_loss_for(points: &Points, h: f64, explicit_a: Option<f64>) -> Result<RobustLoss> {
    if let Some(a) = explicit_a {
        return Ok(RobustLoss::huber(a)?);
    }
    let gram = Gram::gaussian(points, h)?;
    let uniform = vec![1.0 / points.n() as f64; points.n()];
    let mut distances = rkhs_distances(&gram, &uniform)?;
    distances.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite distances"));
    let mid = distances.len() / 2;
    let a = if distances.len() % 2 == 1 {
        distances[mid]
    } else {
        0.5 * (distances[mid - 1] + distances[mid])
    };
    Ok(RobustLoss::huber(a).map_err(|_| {
        Error::Config(format!(
            "median distance {a} cannot anchor a Huber loss; pass --huber-a explicitly"
        ))
    })?)
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let (points, contamination) = match args.label_column.as_deref() {
        Some(column) => {
            let data = load_csv_dataset(&args.input, Some(column), 0.0)?;
            let fraction = data.contamination();
            (data.points, fraction)
        }
        None => (load_features(&args.input, None)?, None),
    };
    let kernel = parse_kernel(&args.kernel, points.dim())?;
    let h = choose_bandwidth(&points, &kernel, args)?;
    let data_source = if args.link_data {
        PointsSource::Path { path: args.input.to_string_lossy().into_owned() }
    } else {
        PointsSource::inline(&points)
    };
    let kernel_name = kernel.family().name().to_string();
    let n = points.n();

    let mut summary = format!("n = {n}, h = {h}");
    let model = match args.method {
        MethodArg::Kde => {
            WeightedDensityEstimate::uniform(points, h, kernel)?;
            SavedModel::Kde { kernel: kernel_name, bandwidth: h, data: data_source }
        }
        MethodArg::Mom => {
            let blocks = args.blocks.ok_or_else(|| {
                Error::Config("the mom method needs --blocks".into())
            })?;
            let partition_seed = derive_seed(args.seed, &[4]);
            let fit = match default_grid_nodes(points.dim()) {
                Some(nodes) => {
                    let built = build_grid(&points, h, 5.0, nodes)?;
                    MomEstimate::fit_normalized(
                        points,
                        blocks,
                        h,
                        kernel,
                        partition_seed,
                        &built.grid,
                    )?
                }
                // Beyond three dimensions the normalization grid is not
                // tractable; store the raw median instead.
                None => MomEstimate::fit_raw(points, blocks, h, kernel, partition_seed)?,
            };
            summary.push_str(&format!(", blocks = {blocks}"));
            let mut model = SavedModel::from_mom(&fit);
            if args.link_data {
                if let SavedModel::Mom { data, .. } = &mut model {
                    *data = PointsSource::Path {
                        path: args.input.to_string_lossy().into_owned(),
                    };
                }
            }
            model
        }
        MethodArg::Rkde => {
            let tol = args.tol.unwrap_or(momkde_core::rkde::DEFAULT_TOL);
            let max_iter = args.max_iter.unwrap_or(momkde_core::rkde::DEFAULT_MAX_ITER);
            let fit = match args.loss {
                LossArg::Hampel => fit_rkde_hampel(&points, h, &kernel, tol, max_iter)?.0,
                LossArg::Huber => {
                    let loss = huber_loss_for(&points, h, args.huber_a)?;
                    fit_rkde(&points, h, &kernel, &loss, tol, max_iter)?
                }
            };
            summary.push_str(&format!(", iterations = {}", fit.iterations));
            SavedModel::Rkde {
                kernel: kernel_name,
                bandwidth: h,
                data: data_source,
                weights: fit.weights,
            }
        }
        MethodArg::Spkde => {
            let eps = args.eps.or(contamination).ok_or_else(|| {
                Error::Config(
                    "the spkde method needs --eps, or a labeled input to read the \
                     outlier fraction from"
                        .into(),
                )
            })?;
            let tol = args.tol.unwrap_or(momkde_core::spkde::DEFAULT_TOL);
            let max_iter = args.max_iter.unwrap_or(momkde_core::spkde::DEFAULT_MAX_ITER);
            let fit = fit_spkde(&points, h, &kernel, eps, tol, max_iter)?;
            summary.push_str(&format!(", iterations = {}", fit.iterations));
            SavedModel::Spkde {
                kernel: kernel_name,
                bandwidth: h,
                data: data_source,
                weights: fit.weights,
                beta: fit.beta,
            }
        }
    };

    save_model(&args.output, &model)?;
    println!("wrote {}: {} fit, {summary}", args.output.display(), model.method());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let saved = load_model(&args.model)?;
    let base_dir = args.model.parent().unwrap_or_else(|| Path::new("."));
    let model = saved.instantiate(base_dir)?;
    let queries = load_features(&args.input, args.label_column.as_deref())?;
    let values = model.evaluate(&queries)?;
    write_scores_csv(&args.output, &queries, &values)?;
    println!("wrote {}: {} scores", args.output.display(), values.len());
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    let rows = run_experiment(&config)?;
    let (results, aggregates, resolved) = emit_results(&rows, &config, &args.out_dir)?;
    println!(
        "wrote {} ({} rows), {}, {}",
        results.display(),
        rows.len(),
        aggregates.display(),
        resolved.display()
    );
    Ok(())
}
