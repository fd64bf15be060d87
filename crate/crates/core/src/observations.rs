use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite_slice, Error, Result};
use crate::family::{dot, GlmFamily};

/// Append-only record of `(X_t, Y_t)` rounds with the Gram matrix
/// `sum_t X_t X_t^T` kept up to date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationLog {
    dim: usize,
    covariates: Vec<Vec<f64>>,
    labels: Vec<f64>,
    gram: DMatrix<f64>,
}

impl ObservationLog {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            covariates: Vec::new(),
            labels: Vec::new(),
            gram: DMatrix::zeros(dim, dim),
        }
    }

    /// Builds a log from parallel covariate/label lists, validating labels
    /// against `family`.
    pub fn from_rounds(family: GlmFamily, dim: usize, xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        let mut log = Self::new(dim);
        for (x, &y) in xs.iter().zip(ys) {
            family.check_label(y)?;
            log.push(x.clone(), y)?;
        }
        Ok(log)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        ensure_finite_slice("covariate", &x)?;
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("label must be finite, got {y}")));
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.gram[(i, j)] += x[i] * x[j];
            }
        }
        self.covariates.push(x);
        self.labels.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn covariates(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Round `t` (1-based, matching the usual indexing of rounds).
    pub fn round(&self, t: usize) -> Option<(&[f64], f64)> {
        if t == 0 || t > self.len() {
            return None;
        }
        Some((&self.covariates[t - 1], self.labels[t - 1]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.covariates
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    /// The first `n` rounds as a standalone log.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let mut out = Self::new(self.dim);
        for (x, y) in self.iter().take(n) {
            out.push(x.to_vec(), y).expect("rounds were validated on insertion");
        }
        out
    }

    /// Covariates restricted to the coordinates in `support` (0-based, in
    /// the given order).
    pub fn restrict(&self, support: &[usize]) -> Result<Self> {
        if let Some(&bad) = support.iter().find(|&&i| i >= self.dim) {
            return Err(Error::InvalidArgument(format!(
                "support index {bad} out of range for dimension {}",
                self.dim
            )));
        }
        let mut out = Self::new(support.len());
        for (x, y) in self.iter() {
            out.push(support.iter().map(|&i| x[i]).collect(), y)?;
        }
        Ok(out)
    }

    /// `sum_t Y_t X_t`.
    pub fn moment(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for (x, y) in self.iter() {
            for i in 0..self.dim {
                m[i] += y * x[i];
            }
        }
        m
    }

    /// `sum_t loss_t(theta)`.
    pub fn total_loss(&self, family: GlmFamily, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        ensure_finite_slice("parameter", theta)?;
        let mut s = 0.0;
        for (x, y) in self.iter() {
            family.check_label(y)?;
            s += family.loss_at(dot(theta, x), y);
        }
        Ok(s)
    }

    /// Largest Euclidean norm of any covariate (0 when empty).
    pub fn max_norm(&self) -> f64 {
        self.covariates
            .iter()
            .map(|x| dot(x, x).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest absolute covariate entry (0 when empty).
    pub fn max_abs_entry(&self) -> f64 {
        self.covariates
            .iter()
            .flat_map(|x| x.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}
