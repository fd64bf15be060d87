//! Exponentially weighted average (EWA) mixture forecaster.
//!
//! The posterior `q_t` is tilted by `exp(-lambda * loss_t)` after every round.
//! Three representations are supported:
//!
//! * conjugate Gaussian (gaussian family, Gaussian prior), exact for any `d`;
//! * a tensor trapezoid grid over a box, for `d <= 3`;
//! * a mixture over all supports `S` of `{0..d}` with prior weights
//!   `pi(S) = 2^{-|S|} / (C(d,|S|) * sum_s 2^{-s})` and one sub-posterior per support.
//!
//! All probability mass is kept in the log domain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::error::{ensure_finite, ensure_finite_slice, Error, Result};
use crate::family::{dot, GlmFamily, HALF_LN_2PI};
use crate::observations::ObservationLog;

pub const MAX_GRID_DIM: usize = 3;
pub const MAX_SPARSE_DIM: usize = 12;

/// Prior descriptor `q_1 ∝ exp(-rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// `rho(theta) = |theta|^2 / (2 scale^2)`.
    Gaussian { scale: f64 },
    /// Subset mixture; each support carries the Gaussian prior restricted to it.
    SparseGaussian { scale: f64 },
    /// All mass on one parameter.
    PointMass { theta: Vec<f64> },
}

impl Prior {
    /// `rho(theta)` up to the normalizer; the point mass gives 0 at its atom
    /// and infinity elsewhere.
    pub fn rho(&self, theta: &[f64]) -> f64 {
        match self {
            Prior::Gaussian { scale } | Prior::SparseGaussian { scale } => dot(theta, theta) / (2.0 * scale * scale),
            Prior::PointMass { theta: atom } => {
                if atom.as_slice() == theta {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Box `[-half_width, half_width]^d` with `nodes_per_dim` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes_per_dim: usize,
}

impl GridSpec {
    /// Box of half-width `8 * scale`; node counts keep a grid under ~250k nodes.
    pub fn default_for(dim: usize, scale: f64) -> Self {
        let nodes_per_dim = match dim {
            0 | 1 => 2001,
            2 => 201,
            _ => 61,
        };
        Self {
            half_width: 8.0 * scale,
            nodes_per_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Branch {
    /// `N(mean, covariance)`; the precision is `covariance^{-1}`.
    Conjugate {
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
    },
    /// Nodes stored row-major, `dim` coordinates each.
    Grid { nodes: Vec<f64>, log_weights: Vec<f64> },
    Sparse {
        supports: Vec<Vec<usize>>,
        components: Vec<Posterior>,
        log_weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    family: GlmFamily,
    dim: usize,
    lambda: f64,
    prior: Prior,
    branch: Branch,
    rounds: usize,
    /// `sum_t log ∫ exp(-lambda * loss_t) dq_t`.
    log_evidence: f64,
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + v.map(|a| (a - max).exp()).sum::<f64>().ln()
}

fn normalize(log_weights: &mut [f64]) -> Result<f64> {
    let z = log_sum_exp(log_weights.iter().copied());
    if !z.is_finite() {
        return Err(Error::Underflow("ewa_update"));
    }
    log_weights.iter_mut().for_each(|w| *w -= z);
    Ok(z)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - HALF_LN_2PI).exp()
}

/// `E[clamp(Z, -b, b)]` for `Z ~ N(m, s^2)`.
pub fn clipped_gaussian_mean(m: f64, s: f64, b: f64) -> f64 {
    if s <= 0.0 {
        return m.clamp(-b, b);
    }
    let alpha = (-b - m) / s;
    let beta = (b - m) / s;
    let (pa, pb) = (std_normal_cdf(alpha), std_normal_cdf(beta));
    let v = -b * pa + b * (1.0 - pb) + m * (pb - pa) + s * (std_normal_pdf(alpha) - std_normal_pdf(beta));
    v.clamp(-b, b)
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")))
    }
}

fn validate_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("prior scale must be positive, got {scale}")))
    }
}

fn gather(x: &[f64], support: &[usize]) -> Vec<f64> {
    support.iter().map(|&i| x[i]).collect()
}

/// Log prior weight of a support of size `k` in dimension `d`.
pub fn sparse_log_prior(d: usize, k: usize) -> f64 {
    let norm: f64 = (0..=d).map(|s| 0.5f64.powi(s as i32)).sum();
    -(k as f64) * std::f64::consts::LN_2 - ln_binomial(d as u64, k as u64) - norm.ln()
}

impl Posterior {
    /// Conjugate Gaussian posterior with prior `N(0, scale^2 I)` for the gaussian family.
    pub fn conjugate(dim: usize, scale: f64, lambda: f64) -> Result<Self> {
        validate_scale(scale)?;
        validate_lambda(lambda)?;
        Ok(Self {
            family: GlmFamily::Gaussian,
            dim,
            lambda,
            prior: Prior::Gaussian { scale },
            branch: Branch::Conjugate {
                mean: DVector::zeros(dim),
                covariance: DMatrix::identity(dim, dim) * (scale * scale),
            },
            rounds: 0,
            log_evidence: 0.0,
        })
    }

    /// Trapezoid grid over `[-c, c]^dim` with prior weights `exp(-|theta|^2 / (2 scale^2))`.
    pub fn grid(family: GlmFamily, dim: usize, scale: f64, lambda: f64, spec: GridSpec) -> Result<Self> {
        validate_scale(scale)?;
        validate_lambda(lambda)?;
        if dim > MAX_GRID_DIM {
            return Err(Error::UnsupportedDimension {
                what: "grid posterior",
                dim,
                limit: MAX_GRID_DIM,
            });
        }
        if !(spec.half_width > 0.0 && spec.half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box half-width must be positive, got {}",
                spec.half_width
            )));
        }
        if spec.nodes_per_dim < 2 {
            return Err(Error::InvalidArgument("a grid needs at least two nodes per axis".into()));
        }
        let k = spec.nodes_per_dim;
        let c = spec.half_width;
        let h = 2.0 * c / (k - 1) as f64;
        let axis: Vec<f64> = (0..k).map(|i| -c + h * i as f64).collect();
        let axis_lw: Vec<f64> = (0..k)
            .map(|i| if i == 0 || i == k - 1 { (0.5 * h).ln() } else { h.ln() })
            .collect();
        let count = k.pow(dim as u32);
        let mut nodes = Vec::with_capacity(count * dim);
        let mut log_weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let mut lw = 0.0;
            let mut sq = 0.0;
            for &i in &idx {
                nodes.push(axis[i]);
                lw += axis_lw[i];
                sq += axis[i] * axis[i];
            }
            log_weights.push(lw - sq / (2.0 * scale * scale));
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < k {
                    break;
                }
                *slot = 0;
            }
        }
        normalize(&mut log_weights)?;
        Ok(Self {
            family,
            dim,
            lambda,
            prior: Prior::Gaussian { scale },
            branch: Branch::Grid { nodes, log_weights },
            rounds: 0,
            log_evidence: 0.0,
        })
    }

    /// Degenerate posterior concentrated on `theta`.
    pub fn point_mass(family: GlmFamily, theta: &[f64], lambda: f64) -> Result<Self> {
        validate_lambda(lambda)?;
        ensure_finite_slice("theta", theta)?;
        Ok(Self {
            family,
            dim: theta.len(),
            lambda,
            prior: Prior::PointMass { theta: theta.to_vec() },
            branch: Branch::Grid {
                nodes: theta.to_vec(),
                log_weights: vec![0.0],
            },
            rounds: 0,
            log_evidence: 0.0,
        })
    }

    /// Subset mixture over all `2^dim` supports. Sub-posteriors are conjugate
    /// for the gaussian family and grids (support size at most 3) otherwise;
    /// `grid` defaults to [`GridSpec::default_for`] per support size.
    pub fn sparse(family: GlmFamily, dim: usize, scale: f64, lambda: f64, grid: Option<GridSpec>) -> Result<Self> {
        validate_scale(scale)?;
        validate_lambda(lambda)?;
        if dim > MAX_SPARSE_DIM {
            return Err(Error::UnsupportedDimension {
                what: "sparse mixture",
                dim,
                limit: MAX_SPARSE_DIM,
            });
        }
        if !family.is_quadratic() && dim > MAX_GRID_DIM {
            return Err(Error::UnsupportedDimension {
                what: "sparse mixture with grid sub-posteriors",
                dim,
                limit: MAX_GRID_DIM,
            });
        }
        let mut supports = Vec::with_capacity(1 << dim);
        let mut components = Vec::with_capacity(1 << dim);
        let mut log_weights = Vec::with_capacity(1 << dim);
        for mask in 0u32..(1u32 << dim) {
            let support: Vec<usize> = (0..dim).filter(|i| mask >> i & 1 == 1).collect();
            let k = support.len();
            let comp = if family.is_quadratic() {
                Self::conjugate(k, scale, lambda)?
            } else if k == 0 {
                Self::point_mass(family, &[], lambda)?
            } else {
                Self::grid(family, k, scale, lambda, grid.unwrap_or_else(|| GridSpec::default_for(k, scale)))?
            };
            log_weights.push(sparse_log_prior(dim, k));
            supports.push(support);
            components.push(comp);
        }
        Ok(Self {
            family,
            dim,
            lambda,
            prior: Prior::SparseGaussian { scale },
            branch: Branch::Sparse {
                supports,
                components,
                log_weights,
            },
            rounds: 0,
            log_evidence: 0.0,
        })
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    /// Number of rounds absorbed.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `sum_t log ∫ exp(-lambda loss_t) dq_t`, i.e. `-lambda` times the
    /// cumulative mix loss.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// Precision matrix of the conjugate branch.
    pub fn precision(&self) -> Option<DMatrix<f64>> {
        match &self.branch {
            Branch::Conjugate { covariance, .. } => covariance.clone().try_inverse(),
            _ => None,
        }
    }

    /// Posterior mean of `theta`.
    pub fn mean(&self) -> DVector<f64> {
        match &self.branch {
            Branch::Conjugate { mean, .. } => mean.clone(),
            Branch::Grid { nodes, log_weights } => {
                let mut m = DVector::zeros(self.dim);
                for (i, lw) in log_weights.iter().enumerate() {
                    let w = lw.exp();
                    for j in 0..self.dim {
                        m[j] += w * nodes[i * self.dim + j];
                    }
                }
                m
            }
            Branch::Sparse {
                supports,
                components,
                log_weights,
            } => {
                let mut m = DVector::zeros(self.dim);
                for ((s, c), lw) in supports.iter().zip(components).zip(log_weights) {
                    let w = lw.exp();
                    let cm = c.mean();
                    for (k, &i) in s.iter().enumerate() {
                        m[i] += w * cm[k];
                    }
                }
                m
            }
        }
    }

    /// `log-sum-exp` of the (grid or mixture) log-weights; 0 for the conjugate branch.
    pub fn log_total_weight(&self) -> f64 {
        match &self.branch {
            Branch::Conjugate { .. } => 0.0,
            Branch::Grid { log_weights, .. } | Branch::Sparse { log_weights, .. } => {
                log_sum_exp(log_weights.iter().copied())
            }
        }
    }

    fn check_round(&self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        ensure_finite_slice("covariate", x)?;
        self.family.check_label(y)
    }

    /// `log ∫ exp(-tilt * loss(a <theta, x> + c, y)) dq(theta)`.
    fn log_integral(&self, x: &[f64], y: f64, a: f64, c: f64, tilt: f64) -> f64 {
        match &self.branch {
            Branch::Conjugate { mean, covariance } => {
                let m = a * dot(mean.as_slice(), x) + c;
                let v = a * a * quad_form(covariance, x);
                let r = y - m;
                -0.5 * (tilt * v).ln_1p() - tilt * r * r / (2.0 * (1.0 + tilt * v)) - tilt * HALF_LN_2PI
            }
            Branch::Grid { nodes, log_weights } => {
                let d = self.dim;
                log_sum_exp(log_weights.iter().enumerate().map(|(i, lw)| {
                    let z = a * dot(&nodes[i * d..(i + 1) * d], x) + c;
                    lw - tilt * self.family.loss_at(z, y)
                }))
            }
            Branch::Sparse {
                supports,
                components,
                log_weights,
            } => log_sum_exp(
                supports
                    .iter()
                    .zip(components)
                    .zip(log_weights)
                    .map(|((s, comp), lw)| lw + comp.log_integral(&gather(x, s), y, a, c, tilt)),
            ),
        }
    }

    /// Absorbs round `(x, y)` and returns `log ∫ exp(-lambda loss) dq_t`.
    pub fn update_in_place(&mut self, x: &[f64], y: f64) -> Result<f64> {
        self.check_round(x, y)?;
        let lp = self.absorb(x, y)?;
        Ok(lp)
    }

    fn absorb(&mut self, x: &[f64], y: f64) -> Result<f64> {
        let lambda = self.lambda;
        let family = self.family;
        let dim = self.dim;
        let lp = match &mut self.branch {
            Branch::Conjugate { mean, covariance } => {
                let sx = &*covariance * DVector::from_column_slice(x);
                let s2 = dot(sx.as_slice(), x);
                let m = dot(mean.as_slice(), x);
                let r = y - m;
                let denom = 1.0 + lambda * s2;
                let lp = -0.5 * (lambda * s2).ln_1p() - lambda * r * r / (2.0 * denom) - lambda * HALF_LN_2PI;
                *mean += &sx * (lambda * r / denom);
                covariance.ger(-lambda / denom, &sx, &sx, 1.0);
                covariance.fill_lower_triangle_with_upper_triangle();
                lp
            }
            Branch::Grid { nodes, log_weights } => {
                for (i, lw) in log_weights.iter_mut().enumerate() {
                    let z = dot(&nodes[i * dim..(i + 1) * dim], x);
                    *lw -= lambda * family.loss_at(z, y);
                }
                normalize(log_weights)?
            }
            Branch::Sparse {
                supports,
                components,
                log_weights,
            } => {
                for ((s, comp), lw) in supports.iter().zip(components.iter_mut()).zip(log_weights.iter_mut()) {
                    *lw += comp.absorb(&gather(x, s), y)?;
                }
                normalize(log_weights)?
            }
        };
        if !lp.is_finite() {
            return Err(Error::Underflow("ewa_update"));
        }
        self.rounds += 1;
        self.log_evidence += lp;
        Ok(lp)
    }

    /// `log ∫ exp(-tilt * sum_t loss_t(theta)) dq(theta)` over a whole log.
    fn log_integral_total(&self, log: &ObservationLog, tilt: f64) -> Result<f64> {
        match &self.branch {
            Branch::Conjugate { mean, covariance } => {
                let d = self.dim;
                let sum_y2: f64 = log.labels().iter().map(|y| y * y).sum();
                let constant = -tilt * (0.5 * sum_y2 + log.len() as f64 * HALF_LN_2PI);
                if d == 0 {
                    return Ok(constant);
                }
                let p0 = covariance
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::InvalidArgument("posterior covariance is not positive definite".into()))?
                    .inverse();
                let p0 = (&p0 + p0.transpose()) * 0.5;
                let p1 = &p0 + log.gram() * tilt;
                let h1 = &p0 * mean + log.moment() * tilt;
                let ch0 = p0.clone().cholesky().ok_or(Error::Underflow("telescoped_regret"))?;
                let ch1 = p1.cholesky().ok_or(Error::Underflow("telescoped_regret"))?;
                let logdet0 = 2.0 * ch0.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let logdet1 = 2.0 * ch1.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let quad1 = h1.dot(&ch1.solve(&h1));
                let quad0 = mean.dot(&(&p0 * mean));
                Ok(0.5 * logdet0 - 0.5 * logdet1 + 0.5 * quad1 - 0.5 * quad0 + constant)
            }
            Branch::Grid { nodes, log_weights } => {
                let d = self.dim;
                let v = log_sum_exp(log_weights.iter().enumerate().map(|(i, lw)| {
                    let node = &nodes[i * d..(i + 1) * d];
                    let total: f64 = log.iter().map(|(x, y)| self.family.loss_at(dot(node, x), y)).sum();
                    lw - tilt * total
                }));
                Ok(v)
            }
            Branch::Sparse {
                supports,
                components,
                log_weights,
            } => {
                let mut terms = Vec::with_capacity(supports.len());
                for ((s, comp), lw) in supports.iter().zip(components).zip(log_weights) {
                    terms.push(lw + comp.log_integral_total(&log.restrict(s)?, tilt)?);
                }
                Ok(log_sum_exp(terms.into_iter()))
            }
        }
    }

    fn pseudo_label_unchecked(&self, x: &[f64], b: f64) -> f64 {
        match &self.branch {
            Branch::Conjugate { mean, covariance } => {
                clipped_gaussian_mean(dot(mean.as_slice(), x), quad_form(covariance, x).max(0.0).sqrt(), b)
            }
            Branch::Grid { nodes, log_weights } => {
                let d = self.dim;
                let v: f64 = log_weights
                    .iter()
                    .enumerate()
                    .map(|(i, lw)| lw.exp() * dot(&nodes[i * d..(i + 1) * d], x).clamp(-b, b))
                    .sum();
                v.clamp(-b, b)
            }
            Branch::Sparse {
                supports,
                components,
                log_weights,
            } => {
                let v: f64 = supports
                    .iter()
                    .zip(components)
                    .zip(log_weights)
                    .map(|((s, comp), lw)| lw.exp() * comp.pseudo_label_unchecked(&gather(x, s), b))
                    .sum();
                v.clamp(-b, b)
            }
        }
    }
}

fn quad_form(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += x[i] * m[(i, j)] * x[j];
        }
    }
    s
}

/// Builds `q_1`. The gaussian family with a Gaussian prior uses the conjugate
/// branch; other families use a grid (`grid` defaults to
/// [`GridSpec::default_for`]).
pub fn ewa_init(family: GlmFamily, dim: usize, prior: &Prior, lambda: f64, grid: Option<GridSpec>) -> Result<Posterior> {
    match prior {
        Prior::Gaussian { scale } => {
            if family.is_quadratic() {
                Posterior::conjugate(dim, *scale, lambda)
            } else {
                let spec = grid.unwrap_or_else(|| GridSpec::default_for(dim, *scale));
                Posterior::grid(family, dim, *scale, lambda, spec)
            }
        }
        Prior::SparseGaussian { scale } => Posterior::sparse(family, dim, *scale, lambda, grid),
        Prior::PointMass { theta } => {
            if theta.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: theta.len(),
                });
            }
            Posterior::point_mass(family, theta, lambda)
        }
    }
}

/// `q_{t+1}` from `q_t` after observing `(x, y)`.
pub fn ewa_update(post: &Posterior, x: &[f64], y: f64) -> Result<Posterior> {
    let mut next = post.clone();
    next.update_in_place(x, y)?;
    Ok(next)
}

/// `-(1/lambda) log ∫ exp(-lambda loss(theta)) dq(theta)`.
pub fn mix_loss(post: &Posterior, x: &[f64], y: f64) -> Result<f64> {
    post.check_round(x, y)?;
    let v = post.log_integral(x, y, 1.0, 0.0, post.lambda);
    if !v.is_finite() {
        return Err(Error::Underflow("mix_loss"));
    }
    Ok(-v / post.lambda)
}

/// `-log ∫ exp(-loss(eta theta + (1-eta) theta_star)) dq(theta)`.
pub fn shifted_mix_loss(post: &Posterior, x: &[f64], y: f64, theta_star: &[f64], eta: f64) -> Result<f64> {
    post.check_round(x, y)?;
    crate::family::check_eta(eta)?;
    if theta_star.len() != post.dim {
        return Err(Error::DimensionMismatch {
            expected: post.dim,
            got: theta_star.len(),
        });
    }
    ensure_finite_slice("theta_star", theta_star)?;
    let z_star = dot(theta_star, x);
    let v = post.log_integral(x, y, eta, (1.0 - eta) * z_star, 1.0);
    if !v.is_finite() {
        return Err(Error::Underflow("shifted_mix_loss"));
    }
    Ok(-v)
}

/// Regret of the EWA forecaster started at `prior` (with the prior's learning
/// rate) against `theta_bar`, as the single integral
/// `-(1/lambda) log ∫ exp(-lambda sum_t (loss_t(theta) - loss_t(theta_bar))) dq_1`.
pub fn telescoped_regret(prior: &Posterior, log: &ObservationLog, theta_bar: &[f64]) -> Result<f64> {
    if log.dim() != prior.dim || theta_bar.len() != prior.dim {
        return Err(Error::DimensionMismatch {
            expected: prior.dim,
            got: if log.dim() != prior.dim { log.dim() } else { theta_bar.len() },
        });
    }
    let comparator = log.total_loss(prior.family, theta_bar)?;
    let li = prior.log_integral_total(log, prior.lambda)?;
    if !li.is_finite() {
        return Err(Error::Underflow("telescoped_regret"));
    }
    Ok(-li / prior.lambda - comparator)
}

/// Same regret accumulated round by round: `sum_t (mix_loss(q_t) - loss_t(theta_bar))`.
/// Returns the regret and the final posterior.
pub fn replay_regret(prior: &Posterior, log: &ObservationLog, theta_bar: &[f64]) -> Result<(f64, Posterior)> {
    let comparator = log.total_loss(prior.family, theta_bar)?;
    let mut post = prior.clone();
    let mut total = 0.0;
    for (x, y) in log.iter() {
        total += -post.update_in_place(x, y)? / post.lambda;
    }
    Ok((total - comparator, post))
}

/// `∫ clamp(<theta, x>, -b, b) dq(theta)`; pass the posterior that has already
/// absorbed round `t`.
pub fn pseudo_label(post_next: &Posterior, x: &[f64], b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    if x.len() != post_next.dim {
        return Err(Error::DimensionMismatch {
            expected: post_next.dim,
            got: x.len(),
        });
    }
    ensure_finite_slice("covariate", x)?;
    ensure_finite("b", b)?;
    Ok(post_next.pseudo_label_unchecked(x, b))
}
