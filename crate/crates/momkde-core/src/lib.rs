//! Core algorithms for robust kernel density estimation.
//!
//! The centerpiece is the median-of-means KDE: the sample is split into a
//! random partition of (nearly) equal-size blocks, a plain KDE is evaluated
//! on each block, and the estimate at a query point is the median of the
//! block values, optionally normalized by its grid integral. Around it this
//! crate provides everything needed to compare that estimator against the
//! standard KDE and two robust baselines on contaminated data:
//!
//! * [`kernel`]: six radial kernel families with per-dimension
//!   normalization.
//! * [`density`]: weighted KDE evaluation shared by all estimators.
//! * [`grid`]: rectangular evaluation grids with trapezoidal quadrature
//!   and density normalization.
//! * [`mom`]: the median-of-means estimator, block partitions, and the
//!   failure-probability / rate-bandwidth helper formulas.
//! * [`rkde`]: robust KDE via M-estimation of the kernel mean in the
//!   RKHS, fitted by iteratively reweighted least squares with Huber or
//!   Hampel losses.
//! * [`spkde`]: scaled-projection KDE, a simplex-constrained quadratic
//!   program solved by projected gradient descent.
//! * [`bandwidth`]: pseudo-likelihood k-fold cross-validation.
//! * [`metrics`]: KL/JS divergences on grids and rank-based AUC.
//! * [`synth`]: seeded generators for the contaminated synthetic
//!   benchmarks, plus ratio-controlled downsampling of labeled data.
//!
//! The crate is `no_std`-compatible (it requires `alloc`); disable default
//! features to build without `std`. All randomized routines take explicit
//! seeds and are bitwise deterministic.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bandwidth;
pub mod data;
pub mod density;
pub mod error;
pub mod gram;
pub mod grid;
pub mod kernel;
pub mod metrics;
pub mod mom;
pub mod rkde;
pub mod seed;
pub mod spkde;
pub mod synth;

pub use data::{Dataset, Label, Points};
pub use density::WeightedDensityEstimate;
pub use error::{CoreError, Result};
pub use grid::{build_grid, integrate_on_grid, normalize_density, EvaluationGrid};
pub use kernel::{KernelFamily, KernelSpec};
pub use mom::{partition_blocks, BlockPartition, MomEstimate};
pub use rkde::{fit_rkde, fit_rkde_hampel, RkdeFit, RobustLoss};
pub use spkde::{fit_spkde, project_simplex, SpkdeFit};
pub use synth::OutlierScheme;
