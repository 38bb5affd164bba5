//! Seeded generators for the contaminated synthetic benchmarks.
//!
//! Inliers are a balanced two-mode Gaussian mixture on the line; the
//! outlier schemes range from broad uniform noise to a thin spike placed
//! adversarially on one of the inlier modes. Every generator is a pure
//! function of its seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Uniform};

use crate::data::{Dataset, Label, Points};
use crate::error::{CoreError, Result};
use crate::seed::derive_seed;

/// Means of the two inlier modes.
pub const INLIER_MEANS: [f64; 2] = [0.0, 6.0];
/// Standard deviation shared by both inlier modes.
pub const INLIER_SD: f64 = 0.5;
/// Bounds of the uniform outlier scheme: three units beyond each mode.
pub const UNIFORM_OUTLIER_RANGE: (f64, f64) = (-3.0, 9.0);
/// Standard deviation of the two thin outlier spikes.
pub const THIN_OUTLIER_SD: f64 = 0.01;

/// How the outliers are placed relative to the inlier mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutlierScheme {
    /// Uniform over the padded inlier range, the classical setting.
    Uniform,
    /// A Gaussian of inlier width centered between the modes.
    RegularGaussian,
    /// A narrow spike between the modes, in a low-density region.
    ThinGaussian,
    /// A narrow spike directly on the first inlier mode, hiding wrong
    /// points where the density is highest.
    AdversarialThinGaussian,
}

impl OutlierScheme {
    pub const ALL: [OutlierScheme; 4] = [
        OutlierScheme::Uniform,
        OutlierScheme::RegularGaussian,
        OutlierScheme::ThinGaussian,
        OutlierScheme::AdversarialThinGaussian,
    ];

    /// Lower-case name used in CLI flags and JSON configs.
    pub fn name(self) -> &'static str {
        match self {
            OutlierScheme::Uniform => "uniform",
            OutlierScheme::RegularGaussian => "regular-gaussian",
            OutlierScheme::ThinGaussian => "thin-gaussian",
            OutlierScheme::AdversarialThinGaussian => "adversarial-thin-gaussian",
        }
    }
}

impl fmt::Display for OutlierScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutlierScheme {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        OutlierScheme::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CoreError::Param(format!("unknown outlier scheme {s:?}")))
    }
}

/// True inlier density at `x`: the balanced mixture of the two modes.
pub fn inlier_density(x: f64) -> f64 {
    let phi = |mean: f64| {
        let z = (x - mean) / INLIER_SD;
        (-0.5 * z * z).exp() / (INLIER_SD * (2.0 * PI).sqrt())
    };
    0.5 * phi(INLIER_MEANS[0]) + 0.5 * phi(INLIER_MEANS[1])
}

fn labeled(values: Vec<f64>, label: Label, name: String, seed: u64) -> Dataset {
    let n = values.len();
    let points = Points::new(values, 1).expect("generated values are finite");
    Dataset::new(points, Some(alloc::vec![label; n]), name, Some(seed))
        .expect("labels match by construction")
}

/// Draws `n` inliers from the two-mode mixture, labeled as inliers.
pub fn sample_inliers(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = Normal::new(0.0, INLIER_SD).expect("positive standard deviation");
    let values = (0..n)
        .map(|_| {
            let mean = INLIER_MEANS[usize::from(rng.random::<bool>())];
            mean + rng.sample(mode)
        })
        .collect();
    labeled(values, Label::Inlier, "synthetic-inliers".into(), seed)
}

/// Draws `n` outliers under `scheme`, labeled as outliers.
pub fn sample_outliers(scheme: OutlierScheme, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = match scheme {
        OutlierScheme::Uniform => {
            let (lo, hi) = UNIFORM_OUTLIER_RANGE;
            let range = Uniform::new(lo, hi).expect("nonempty range");
            (0..n).map(|_| rng.sample(range)).collect()
        }
        OutlierScheme::RegularGaussian => {
            let spike = Normal::new(3.0, INLIER_SD).expect("positive standard deviation");
            (0..n).map(|_| rng.sample(spike)).collect()
        }
        OutlierScheme::ThinGaussian => {
            let spike = Normal::new(3.0, THIN_OUTLIER_SD).expect("positive standard deviation");
            (0..n).map(|_| rng.sample(spike)).collect()
        }
        OutlierScheme::AdversarialThinGaussian => {
            let spike = Normal::new(INLIER_MEANS[0], THIN_OUTLIER_SD)
                .expect("positive standard deviation");
            (0..n).map(|_| rng.sample(spike)).collect()
        }
    };
    labeled(values, Label::Outlier, format!("synthetic-{scheme}"), seed)
}

/// Inliers and outliers stacked into one labeled dataset (inliers first),
/// with the two draws on independent child seeds.
pub fn contaminated_sample(
    scheme: OutlierScheme,
    n_inliers: usize,
    n_outliers: usize,
    seed: u64,
) -> Dataset {
    let inliers = sample_inliers(n_inliers, derive_seed(seed, &[1]));
    let outliers = sample_outliers(scheme, n_outliers, derive_seed(seed, &[2]));
    let mut values = inliers.points.values().to_vec();
    values.extend_from_slice(outliers.points.values());
    let mut labels = alloc::vec![Label::Inlier; n_inliers];
    labels.extend(alloc::vec![Label::Outlier; n_outliers]);
    let points = Points::new(values, 1).expect("concatenation of finite values");
    Dataset::new(points, Some(labels), format!("synthetic-{scheme}-contaminated"), Some(seed))
        .expect("labels match by construction")
}
