//! Dense Gram matrices of Gaussian kernel sections.
//!
//! The robust baselines work in the RKHS spanned by the kernel bumps
//! k_h(·, X_i). For the Gaussian family the pairwise inner products have
//! a closed form: convolving two bandwidth-h Gaussians gives the
//! bandwidth-h√2 Gaussian at the difference of the centers, so
//! G_ij = (4πh²)^{−d/2} · exp(−‖X_i − X_j‖² / (4h²)).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Points;
use crate::error::{CoreError, Result};

/// A symmetric positive semidefinite matrix of kernel inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    values: Vec<f64>,
    n: usize,
}

impl Gram {
    /// Closed-form Gram matrix of bandwidth-`bandwidth` Gaussian bumps
    /// centered at the rows of `points`.
    pub fn gaussian(points: &Points, bandwidth: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::EmptyModel);
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(CoreError::Param(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        let n = points.n();
        let d = points.dim();
        let scale = (4.0 * PI * bandwidth * bandwidth).powf(-0.5 * d as f64);
        let inv_4h2 = 1.0 / (4.0 * bandwidth * bandwidth);
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            let xi = points.row(i);
            values[i * n + i] = scale;
            for j in (i + 1)..n {
                let xj = points.row(j);
                let sq: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = scale * (-sq * inv_4h2).exp();
                values[i * n + j] = g;
                values[j * n + i] = g;
            }
        }
        Ok(Self { values, n })
    }

    /// Wraps an explicit row-major matrix, checking shape, finiteness,
    /// and symmetry. Positive semidefiniteness is not verified here; it
    /// surfaces later as a negative squared distance.
    pub fn from_raw(values: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(CoreError::Shape(format!(
                "{} entries cannot form an {n} x {n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            for j in i..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(CoreError::Numeric(format!("non-finite entry at ({i}, {j})")));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(CoreError::Numeric(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { values, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Matrix-vector product Gv.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = &self.values[i * self.n..(i + 1) * self.n];
            out.push(row.iter().zip(v).map(|(g, x)| g * x).sum());
        }
        out
    }

    /// Quadratic form vᵀGv.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(gv, x)| gv * x).sum()
    }

    /// Largest eigenvalue by power iteration, stopping when the estimate
    /// changes by less than `rel_tol` relatively. The matrix has positive
    /// entries, so iteration from the all-ones vector converges.
    pub fn largest_eigenvalue(&self, rel_tol: f64) -> Result<f64> {
        let n = self.n;
        let mut v = alloc::vec![1.0 / (n as f64).sqrt(); n];
        let mut estimate = 0.0;
        for _ in 0..10_000 {
            let mut w = self.mul_vec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(CoreError::Numeric("power iteration diverged".into()));
            }
            if norm == 0.0 {
                return Ok(0.0);
            }
            for x in &mut w {
                *x /= norm;
            }
            if (norm - estimate).abs() <= rel_tol * norm {
                return Ok(norm);
            }
            estimate = norm;
            v = w;
        }
        Err(CoreError::Numeric("power iteration did not converge".into()))
    }
}
