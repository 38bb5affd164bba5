//! Radial kernel families with per-dimension normalization.
//!
//! Every kernel is of the form K(u) = normalizer · k(‖u‖₂) with a
//! non-increasing profile k on the nonnegative half-line, so K is
//! spherically symmetric, nonnegative, and integrates to one in the
//! dimension it was built for. Compactly supported profiles vanish
//! exactly beyond radius 1.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::grid::{integrate_on_grid, EvaluationGrid};

/// Relative tolerance of the radial quadrature used for normalizers that
/// have no closed form in the requested dimension.
const RADIAL_QUAD_REL_TOL: f64 = 1e-8;

/// The supported radial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    Exponential,
    Uniform,
    Triangular,
    Cosine,
    Epanechnikov,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 6] = [
        KernelFamily::Gaussian,
        KernelFamily::Exponential,
        KernelFamily::Uniform,
        KernelFamily::Triangular,
        KernelFamily::Cosine,
        KernelFamily::Epanechnikov,
    ];

    /// Lower-case name used in CLI flags and JSON configs.
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Exponential => "exponential",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Triangular => "triangular",
            KernelFamily::Cosine => "cosine",
            KernelFamily::Epanechnikov => "epanechnikov",
        }
    }

    /// Whether the profile vanishes identically beyond radius 1.
    pub fn compactly_supported(self) -> bool {
        !matches!(self, KernelFamily::Gaussian | KernelFamily::Exponential)
    }

    /// Unnormalized profile value at radius `t >= 0`.
    fn raw(self, t: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * t * t).exp(),
            KernelFamily::Exponential => (-t).exp(),
            KernelFamily::Uniform => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Triangular => {
                if t <= 1.0 {
                    1.0 - t
                } else {
                    0.0
                }
            }
            KernelFamily::Cosine => {
                if t <= 1.0 {
                    (0.5 * PI * t).cos()
                } else {
                    0.0
                }
            }
            KernelFamily::Epanechnikov => {
                if t <= 1.0 {
                    1.0 - t * t
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CoreError::Param(format!("unknown kernel family {s:?}")))
    }
}

/// A kernel family bound to a dimension, with the normalizer that makes
/// the induced K integrate to one over R^d (Euclidean norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    normalizer: f64,
}

impl KernelSpec {
    /// Builds the kernel for dimension `dim`, computing the normalizer in
    /// closed form where available and by radial quadrature otherwise.
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::Param("kernel dimension must be at least 1".into()));
        }
        let normalizer = normalizer(family, dim)?;
        Ok(Self { family, dim, normalizer })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Normalized profile k(t) at radius `t`, so that K(u) = k(‖u‖).
    pub fn profile(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(CoreError::Param(format!("profile radius {t} is not nonnegative")));
        }
        Ok(self.profile_at(t))
    }

    /// Unchecked profile for hot loops; `t` must be nonnegative.
    pub(crate) fn profile_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.normalizer * self.family.raw(t)
    }

    /// Kernel value K(u) = k(‖u‖₂) for a `dim`-dimensional offset.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(CoreError::Shape(format!(
                "offset of length {} fed to a {}-dimensional kernel",
                u.len(),
                self.dim
            )));
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(self.profile_at(norm))
    }
}

/// Volume of the d-dimensional unit ball, via V_d = (2π/d)·V_{d−2}.
fn unit_ball_volume(dim: usize) -> f64 {
    let (mut volume, start) = if dim % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= dim {
        volume *= 2.0 * PI / k as f64;
        k += 2;
    }
    volume
}

/// Surface area of the unit sphere in R^d: S_{d−1} = d·V_d.
fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

fn normalizer(family: KernelFamily, dim: usize) -> Result<f64> {
    let d = dim as f64;
    let closed_form = match family {
        KernelFamily::Gaussian => Some((2.0 * PI).powf(-0.5 * d)),
        KernelFamily::Uniform => Some(1.0 / unit_ball_volume(dim)),
        // ∫(1 − ‖u‖²)₊ du = V_d · 2/(d+2).
        KernelFamily::Epanechnikov => Some((d + 2.0) / (2.0 * unit_ball_volume(dim))),
        KernelFamily::Exponential if dim == 1 => Some(0.5),
        KernelFamily::Triangular if dim == 1 => Some(1.0),
        KernelFamily::Cosine if dim == 1 => Some(0.25 * PI),
        _ => None,
    };
    if let Some(value) = closed_form {
        return Ok(value);
    }
    // ∫ k(‖u‖) du = S_{d−1} ∫₀^∞ k(r) r^{d−1} dr.
    let upper = if family.compactly_supported() { 1.0 } else { 50.0 + 5.0 * d };
    let mass = unit_sphere_area(dim) * radial_integral(family, dim, upper)?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(CoreError::Numeric(format!(
            "radial mass of {family} in dimension {dim} is {mass}"
        )));
    }
    Ok(1.0 / mass)
}

/// ∫₀^upper k(r)·r^{d−1} dr by composite Simpson with interval doubling
/// until the relative change falls below `RADIAL_QUAD_REL_TOL`.
fn radial_integral(family: KernelFamily, dim: usize, upper: f64) -> Result<f64> {
    let f = |r: f64| family.raw(r) * r.powi(dim as i32 - 1);
    let mut intervals = 64usize;
    let mut previous = simpson(&f, 0.0, upper, intervals);
    loop {
        intervals *= 2;
        let current = simpson(&f, 0.0, upper, intervals);
        if (current - previous).abs() <= RADIAL_QUAD_REL_TOL * current.abs() {
            return Ok(current);
        }
        if intervals >= (1 << 22) {
            return Err(CoreError::Numeric(format!(
                "radial quadrature for {family} in dimension {dim} did not converge"
            )));
        }
        previous = current;
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Numerical self-check of a kernel on a grid: nonnegativity everywhere,
/// unit mass by quadrature, and a non-increasing radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValidation {
    pub nonnegative: bool,
    pub integral: f64,
    pub monotone_profile: bool,
}

impl KernelValidation {
    /// All checks passed with the mass within `tol` of 1.
    pub fn passed(&self, tol: f64) -> bool {
        self.nonnegative && self.monotone_profile && (self.integral - 1.0).abs() <= tol
    }
}

/// Evaluates the kernel over `grid` and reports the checks; failures are
/// carried in the report, not raised as errors.
pub fn validate_kernel(spec: &KernelSpec, grid: &EvaluationGrid) -> Result<KernelValidation> {
    if grid.dim() != spec.dim() {
        return Err(CoreError::Shape(format!(
            "grid dimension {} does not match kernel dimension {}",
            grid.dim(),
            spec.dim()
        )));
    }
    let mut nonnegative = true;
    let mut values = Vec::with_capacity(grid.num_nodes());
    let mut node = alloc::vec![0.0; grid.dim()];
    for flat in 0..grid.num_nodes() {
        grid.node(flat, &mut node);
        let v = spec.eval(&node)?;
        nonnegative &= v >= 0.0;
        values.push(v);
    }
    let integral = integrate_on_grid(grid, &values)?;

    // Sample the profile out to the farthest grid corner.
    let radius = grid
        .lower()
        .iter()
        .zip(grid.upper())
        .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let samples = 2048;
    let mut monotone_profile = true;
    let mut previous = spec.profile_at(0.0);
    for i in 1..=samples {
        let t = radius * i as f64 / samples as f64;
        let value = spec.profile_at(t);
        if value > previous + 1e-12 * previous.abs().max(1.0) {
            monotone_profile = false;
            break;
        }
        previous = value;
    }
    Ok(KernelValidation { nonnegative, integral, monotone_profile })
}
