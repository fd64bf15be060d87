//! Exponential-family GLMs with canonical link.
//!
//! A family is determined by its log-partition function `psi`. The label
//! density given a natural parameter `z = <theta, x>` is
//! `exp(z * y - psi(z)) * h(y)`. All built-in families are globally smooth
//! (`psi'' <= M`); families with unbounded curvature such as Poisson are not
//! offered because every width formula in [`crate::confsets`] relies on a
//! finite `M`. A new family is added by extending [`GlmFamily`] and filling in
//! each match arm below.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_finite_slice, Error, Result};

/// `0.5 * ln(2 pi)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    /// Linear model with unit-variance Gaussian noise, `psi(z) = z^2 / 2`.
    Gaussian,
    /// Bernoulli labels with the sigmoid mean map, `psi(z) = ln(1 + e^z)`.
    Logistic,
}

impl GlmFamily {
    pub fn name(self) -> &'static str {
        match self {
            GlmFamily::Gaussian => "gaussian",
            GlmFamily::Logistic => "logistic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" | "linear" | "normal" => Ok(GlmFamily::Gaussian),
            "logistic" | "bernoulli" => Ok(GlmFamily::Logistic),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }

    /// True when `psi` is quadratic, so Bregman divergences and mixture
    /// integrals have exact Gaussian closed forms.
    pub fn is_quadratic(self) -> bool {
        matches!(self, GlmFamily::Gaussian)
    }

    pub fn log_partition(self, z: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => 0.5 * z * z,
            // log(1 + e^z) = max(z, 0) + log(1 + e^{-|z|})
            GlmFamily::Logistic => z.max(0.0) + (-z.abs()).exp().ln_1p(),
        }
    }

    /// `mu = psi'`.
    pub fn mean(self, z: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => z,
            GlmFamily::Logistic => sigmoid(z),
        }
    }

    /// `psi''`.
    pub fn variance(self, z: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => 1.0,
            GlmFamily::Logistic => sigmoid(z) * sigmoid(-z),
        }
    }

    /// Global upper bound `M` on `psi''`.
    pub fn smoothness(self) -> f64 {
        match self {
            GlmFamily::Gaussian => 1.0,
            GlmFamily::Logistic => 0.25,
        }
    }

    /// `m(b) = inf_{|z| <= b} psi''(z)`.
    ///
    /// For the logistic family `psi''` is even and decreasing in `|z|`, so the
    /// infimum sits at `z = b`.
    pub fn strong_convexity_at(self, b: f64) -> Result<f64> {
        if !(b > 0.0) || b.is_nan() {
            return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
        }
        Ok(match self {
            GlmFamily::Gaussian => 1.0,
            GlmFamily::Logistic => self.variance(b),
        })
    }

    /// Condition number `kappa = M / m(b)`.
    pub fn condition_number(self, b: f64) -> Result<f64> {
        let m = self.strong_convexity_at(b)?;
        if m <= 0.0 {
            return Err(Error::StrongConvexityUnavailable(m));
        }
        Ok(self.smoothness() / m)
    }

    pub fn check_label(self, y: f64) -> Result<()> {
        ensure_finite("label", y)?;
        match self {
            GlmFamily::Gaussian => Ok(()),
            GlmFamily::Logistic if y == 0.0 || y == 1.0 => Ok(()),
            GlmFamily::Logistic => Err(Error::Domain {
                family: self.name(),
                label: y,
            }),
        }
    }

    /// `ln h(y)` for the reference measure.
    pub fn log_carrier(self, y: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(match self {
            GlmFamily::Gaussian => -0.5 * y * y - HALF_LN_2PI,
            GlmFamily::Logistic => 0.0,
        })
    }

    /// Negative log-likelihood as a function of the natural parameter only.
    /// Callers must have validated `y`.
    pub(crate) fn loss_at(self, z: f64, y: f64) -> f64 {
        let log_h = match self {
            GlmFamily::Gaussian => -0.5 * y * y - HALF_LN_2PI,
            GlmFamily::Logistic => 0.0,
        };
        match self {
            // Written as a square to avoid cancellation between -zy and z^2/2.
            GlmFamily::Gaussian => 0.5 * (z - y) * (z - y) + HALF_LN_2PI,
            GlmFamily::Logistic => -z * y + self.log_partition(z) - log_h,
        }
    }

    /// Draws a label whose conditional mean is `mu(z)`.
    pub fn sample_label<R: Rng + ?Sized>(self, z: f64, rng: &mut R) -> Result<f64> {
        ensure_finite("natural parameter", z)?;
        Ok(match self {
            GlmFamily::Gaussian => {
                let eps: f64 = rng.sample(StandardNormal);
                z + eps
            }
            GlmFamily::Logistic => {
                let u: f64 = rng.random();
                if u < sigmoid(z) {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(x: &[f64], theta: &[f64]) -> Result<()> {
    if x.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: theta.len(),
        });
    }
    ensure_finite_slice("covariate", x)?;
    ensure_finite_slice("parameter", theta)
}

/// Per-round loss `-<theta,x> y + psi(<theta,x>) - ln h(y)`, i.e. the full
/// negative log density of `y`.
pub fn negloglik(family: GlmFamily, x: &[f64], y: f64, theta: &[f64]) -> Result<f64> {
    check_pair(x, theta)?;
    family.check_label(y)?;
    Ok(family.loss_at(dot(theta, x), y))
}

/// Gradient of [`negloglik`] in `theta`: `(mu(<theta,x>) - y) x`.
pub fn negloglik_grad(family: GlmFamily, x: &[f64], y: f64, theta: &[f64]) -> Result<Vec<f64>> {
    check_pair(x, theta)?;
    family.check_label(y)?;
    let r = family.mean(dot(theta, x)) - y;
    Ok(x.iter().map(|xi| r * xi).collect())
}

/// Symmetrized divergence `psi(z)/2 + psi(z')/2 - psi((z+z')/2)`.
pub fn d_psi(family: GlmFamily, z: f64, z_prime: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    ensure_finite("z'", z_prime)?;
    Ok(d_psi_unchecked(family, z, z_prime))
}

pub(crate) fn d_psi_unchecked(family: GlmFamily, z: f64, z_prime: f64) -> f64 {
    match family {
        GlmFamily::Gaussian => 0.125 * (z - z_prime) * (z - z_prime),
        GlmFamily::Logistic => {
            let mid = family.log_partition(0.5 * (z + z_prime));
            let v = 0.5 * (family.log_partition(z) - mid) + 0.5 * (family.log_partition(z_prime) - mid);
            v.max(0.0)
        }
    }
}

/// Loss evaluated at `eta * theta + (1 - eta) * theta_star`.
pub fn shifted_loss(
    family: GlmFamily,
    x: &[f64],
    y: f64,
    theta: &[f64],
    theta_star: &[f64],
    eta: f64,
) -> Result<f64> {
    check_eta(eta)?;
    check_pair(x, theta)?;
    check_pair(x, theta_star)?;
    family.check_label(y)?;
    let z = eta * dot(theta, x) + (1.0 - eta) * dot(theta_star, x);
    Ok(family.loss_at(z, y))
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eta must lie in (0, 1], got {eta}")))
    }
}

/// Clamp of `z` to `[-b, b]`.
pub fn truncate(z: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    Ok(z.clamp(-b, b))
}

/// Gaussian density normalizer used by tests and the quadrature code.
pub(crate) fn ln_gaussian_volume(dim: usize, scale: f64) -> f64 {
    0.5 * dim as f64 * (2.0 * PI * scale * scale).ln()
}
