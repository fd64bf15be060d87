//! Bregman information gain of the regularized cumulative loss
//! `Z(theta) = lambda * sum_t loss_t(theta) + |theta|^2 / (2 gamma^2)`:
//!
//! `gain = -log( ∫ exp(-B_Z(theta, theta_hat)) dtheta / ∫ exp(-rho(theta)) dtheta )`
//!
//! with `theta_hat` the minimizer of `Z`, plus the closed-form upper bounds
//! that enter the confidence widths.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ridge_mle;
use crate::family::{dot, ln_gaussian_volume, GlmFamily};
use crate::observations::ObservationLog;

pub const MAX_QUADRATURE_DIM: usize = 3;
/// Relative threshold on eigenvalues for the numerical rank.
pub const RANK_TOL: f64 = 1e-10;
const TAIL_LOG: f64 = -30.0;
const BOUNDARY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoGainReport {
    /// Quadrature or closed-form value; absent when the dimension is too large.
    pub exact: Option<f64>,
    /// `0.5 * log det(lambda M gamma^2 Lambda + I)`.
    pub bound: f64,
    /// `0.5 * r * log(1 + lambda M gamma^2 n L^2 / r)` with `r = rank(Lambda)`.
    pub rank_bound: f64,
    pub regularized_minimizer: DVector<f64>,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `log det(A)` via Cholesky of `(A + A^T) / 2`.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let ch = symmetrize(a)
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// `0.5 * log det(lambda M gamma^2 Lambda + I)`.
pub fn info_gain_bound(gram: &DMatrix<f64>, smoothness: f64, gamma: f64, lambda: f64) -> Result<f64> {
    for (name, v) in [("M", smoothness), ("gamma", gamma), ("lambda", lambda)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let d = gram.nrows();
    let a = gram * (lambda * smoothness * gamma * gamma) + DMatrix::identity(d, d);
    Ok(0.5 * log_det_spd(&a)?)
}

/// Numerical rank: eigenvalues above `RANK_TOL` times the largest.
pub fn numerical_rank(gram: &DMatrix<f64>) -> usize {
    let eig = symmetrize(gram).symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    eig.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

/// `rank(Lambda) * log(1 + alpha n L^2 / rank(Lambda))`, an upper bound on
/// `log det(alpha Lambda + I)` when every covariate has norm at most `L`.
pub fn logdet_rank_bound(gram: &DMatrix<f64>, alpha: f64, l: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0) || !(l >= 0.0) {
        return Err(Error::InvalidArgument(format!("need alpha > 0 and L >= 0, got {alpha}, {l}")));
    }
    let r = numerical_rank(gram);
    if r == 0 {
        return Ok(0.0);
    }
    let r = r as f64;
    Ok(r * (alpha * n as f64 * l * l / r).ln_1p())
}

struct RegularizedLoss<'a> {
    family: GlmFamily,
    log: &'a ObservationLog,
    lambda: f64,
    gamma: f64,
}

impl RegularizedLoss<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        let s: f64 = self.log.iter().map(|(x, y)| self.family.loss_at(dot(theta, x), y)).sum();
        self.lambda * s + dot(theta, theta) / (2.0 * self.gamma * self.gamma)
    }

    fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let mut g = DVector::from_column_slice(theta) / (self.gamma * self.gamma);
        for (x, y) in self.log.iter() {
            let r = self.lambda * (self.family.mean(dot(theta, x)) - y);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += r * xi;
            }
        }
        g
    }

    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = theta.len();
        let mut h = DMatrix::identity(d, d) / (self.gamma * self.gamma);
        for (x, _) in self.log.iter() {
            let w = self.lambda * self.family.variance(dot(theta, x));
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] += w * x[i] * x[j];
                }
            }
        }
        h
    }
}

fn check_scales(gamma: f64, lambda: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite() && lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma and lambda must be positive, got {gamma}, {lambda}"
        )));
    }
    Ok(())
}

/// Tensor trapezoid integral of `exp(-B_Z(theta_hat + L u, theta_hat))` over a
/// box in `u`, stepping the box out until the integrand on its boundary is
/// below `exp(-30)`. Returns the log of the integral in `theta` coordinates.
fn log_bregman_volume(z: &RegularizedLoss<'_>, theta_hat: &DVector<f64>) -> Result<f64> {
    let d = theta_hat.len();
    let h = z.hessian(theta_hat.as_slice());
    let cov = symmetrize(
        &h.cholesky()
            .ok_or_else(|| Error::InvalidArgument("Hessian is not positive definite".into()))?
            .inverse(),
    );
    let l = cov
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("inverse Hessian is not positive definite".into()))?
        .l();
    let log_det_l: f64 = l.diagonal().iter().map(|v| v.ln()).sum();
    let z_hat = z.value(theta_hat.as_slice());
    let g_hat = z.gradient(theta_hat.as_slice());
    let bregman = |u: &[f64]| -> f64 {
        let du = &l * DVector::from_column_slice(u);
        let theta = theta_hat + &du;
        z.value(theta.as_slice()) - z_hat - g_hat.dot(&du)
    };
    let k: usize = match d {
        1 => 4001,
        2 => 401,
        _ => 81,
    };
    let mut half = 8.0;
    for _ in 0..12 {
        let step = 2.0 * half / (k - 1) as f64;
        let count = k.pow(d as u32);
        let mut idx = vec![0usize; d];
        let mut u = vec![0.0; d];
        let mut interior = Vec::with_capacity(count);
        let mut boundary_max = f64::NEG_INFINITY;
        let mut boundary = Vec::new();
        for _ in 0..count {
            let mut lw = 0.0;
            let mut on_edge = false;
            for (j, &i) in idx.iter().enumerate() {
                u[j] = -half + step * i as f64;
                if i == 0 || i == k - 1 {
                    lw += (0.5 * step).ln();
                    on_edge = true;
                } else {
                    lw += step.ln();
                }
            }
            let v = -bregman(&u);
            if on_edge {
                boundary_max = boundary_max.max(v);
                boundary.push(lw + v);
            }
            interior.push(lw + v);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < k {
                    break;
                }
                *slot = 0;
            }
        }
        if boundary_max < TAIL_LOG {
            let total = lse(&interior);
            let edge = lse(&boundary);
            let ratio = (edge - total).exp();
            if ratio > BOUNDARY_RATIO {
                return Err(Error::Accuracy {
                    operation: "info_gain_exact",
                    ratio,
                });
            }
            return Ok(total + log_det_l);
        }
        half *= 1.5;
    }
    Err(Error::Accuracy {
        operation: "info_gain_exact",
        ratio: 1.0,
    })
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn gain_from_volume(log_volume: f64, d: usize, gamma: f64) -> f64 {
    // quadrature error can leave a value a hair below zero
    (ln_gaussian_volume(d, gamma) - log_volume).max(0.0)
}

/// Exact information gain: closed form for the gaussian family, tensor
/// quadrature in whitened coordinates for other families with `d <= 3`.
pub fn info_gain_exact(log: &ObservationLog, family: GlmFamily, gamma: f64, lambda: f64) -> Result<f64> {
    check_scales(gamma, lambda)?;
    let d = log.dim();
    if log.is_empty() || d == 0 {
        return Ok(0.0);
    }
    if family.is_quadratic() {
        let a = log.gram() * (lambda * gamma * gamma) + DMatrix::identity(d, d);
        return Ok(0.5 * log_det_spd(&a)?);
    }
    info_gain_quadrature(log, family, gamma, lambda)
}

/// Quadrature value for any family (used to cross-check the closed form).
pub fn info_gain_quadrature(log: &ObservationLog, family: GlmFamily, gamma: f64, lambda: f64) -> Result<f64> {
    check_scales(gamma, lambda)?;
    let d = log.dim();
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::UnsupportedDimension {
            what: "information gain quadrature",
            dim: d,
            limit: MAX_QUADRATURE_DIM,
        });
    }
    if log.is_empty() || d == 0 {
        return Ok(0.0);
    }
    let theta_hat = ridge_mle(log, family, gamma, lambda)?.solution;
    let z = RegularizedLoss {
        family,
        log,
        lambda,
        gamma,
    };
    Ok(gain_from_volume(log_bregman_volume(&z, &theta_hat)?, d, gamma))
}

/// Information gain of the sub-model on the coordinates in `support`.
pub fn restricted_info_gain(
    log: &ObservationLog,
    family: GlmFamily,
    gamma: f64,
    lambda: f64,
    support: &[usize],
) -> Result<f64> {
    check_scales(gamma, lambda)?;
    if support.is_empty() {
        return Ok(0.0);
    }
    info_gain_exact(&log.restrict(support)?, family, gamma, lambda)
}

/// Exact value where available together with both upper bounds.
pub fn info_gain_report(log: &ObservationLog, family: GlmFamily, gamma: f64, lambda: f64) -> Result<InfoGainReport> {
    check_scales(gamma, lambda)?;
    let minimizer = ridge_mle(log, family, gamma, lambda)?.solution;
    let exact = if family.is_quadratic() || log.dim() <= MAX_QUADRATURE_DIM {
        Some(info_gain_exact(log, family, gamma, lambda)?)
    } else {
        None
    };
    let alpha = lambda * family.smoothness() * gamma * gamma;
    Ok(InfoGainReport {
        exact,
        bound: info_gain_bound(log.gram(), family.smoothness(), gamma, lambda)?,
        rank_bound: 0.5 * logdet_rank_bound(log.gram(), alpha, log.max_norm(), log.len())?,
        regularized_minimizer: minimizer,
    })
}

/// `(rho(theta_bar) + gain) / lambda`.
pub fn ewa_regret_bound(rho_at_comparator: f64, info_gain: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    Ok((rho_at_comparator + info_gain) / lambda)
}

/// `(gain_S + rho(theta_bar) + s log(2 e d / s) + log 2) / lambda`; the
/// `s log` term is dropped when `s = 0`.
pub fn sparse_regret_bound(
    restricted_gain: f64,
    rho_at_comparator: f64,
    support_size: usize,
    d: usize,
    lambda: f64,
) -> Result<f64> {
    if support_size > d {
        return Err(Error::InvalidArgument(format!(
            "support size {support_size} exceeds dimension {d}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let s = support_size as f64;
    let complexity = if support_size == 0 {
        0.0
    } else {
        s * (2.0 * std::f64::consts::E * d as f64 / s).ln()
    };
    Ok((restricted_gain + rho_at_comparator + complexity + std::f64::consts::LN_2) / lambda)
}
