//! Confidence sets for the GLM parameter.
//!
//! * [`LikelihoodRatioSet`]: `{theta : sum_t loss_t(theta) - loss_t(ref) <= beta}`
//!   around the ridge estimate ([`analytic_adaptive_set`]).
//! * [`BregmanBallSet`]: `{theta : B_Psi(theta, center) <= radius}` around the
//!   polar-constrained MLE ([`transductive_set`]).
//! * [`PseudoLabelEllipsoid`]: `{theta : 0.5 sum_t (<theta, X_t> - Yhat_t)^2 <= beta}`
//!   ([`algorithmic_det_set`], [`ewa_alg_set`]).
//!
//! Every set is closed: boundary points are members.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ensure_finite_slice, Error, Result};
use crate::estimators::{constrained_mle, ridge_mle};
use crate::family::{dot, truncate, GlmFamily};
use crate::forecasters::{pseudo_label, Posterior};
use crate::infogain::{info_gain_bound, logdet_rank_bound};
use crate::observations::ObservationLog;

/// Whether an algorithmic width uses the realized regret against the true
/// parameter (validation only) or a uniform regret bound (deployable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthMode {
    Oracle,
    Bound,
}

impl WidthMode {
    pub fn name(self) -> &'static str {
        match self {
            WidthMode::Oracle => "oracle",
            WidthMode::Bound => "bound",
        }
    }
}

/// Regret entering an algorithmic width, tagged with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretTerm {
    pub mode: WidthMode,
    pub value: f64,
}

impl RegretTerm {
    pub fn oracle(value: f64) -> Self {
        Self {
            mode: WidthMode::Oracle,
            value,
        }
    }

    pub fn bound(value: f64) -> Self {
        Self {
            mode: WidthMode::Bound,
            value,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_theta(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: theta.len(),
        });
    }
    ensure_finite_slice("theta", theta)
}

fn gram_row_major(g: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(g.len());
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            v.push(g[(i, j)]);
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatioSet {
    family: GlmFamily,
    log: ObservationLog,
    reference: DVector<f64>,
    reference_loss: f64,
    beta: f64,
    delta: f64,
    gamma: f64,
}

impl LikelihoodRatioSet {
    pub fn reference(&self) -> &DVector<f64> {
        &self.reference
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `sum_t (loss_t(theta) - loss_t(reference))`; may be negative.
    pub fn excess_loss(&self, theta: &[f64]) -> Result<f64> {
        check_theta(self.log.dim(), theta)?;
        Ok(self.log.total_loss(self.family, theta)? - self.reference_loss)
    }

    fn penalty(&self) -> f64 {
        self.reference.norm_squared() / (2.0 * self.gamma * self.gamma)
    }

    /// Width with the log-determinant replaced by `(d/2) log(1 + gamma^2 M L^2 n / d)`.
    pub fn worst_case_beta(&self, l: f64) -> f64 {
        let d = self.log.dim() as f64;
        let n = self.log.len() as f64;
        let m = self.family.smoothness();
        self.penalty() + 0.5 * d * (self.gamma * self.gamma * m * l * l * n / d).ln_1p() + (1.0 / self.delta).ln()
    }

    /// Width with the log-determinant replaced by its rank-adaptive cap.
    pub fn rank_adaptive_beta(&self, l: f64) -> Result<f64> {
        let alpha = self.gamma * self.gamma * self.family.smoothness();
        let cap = logdet_rank_bound(self.log.gram(), alpha, l, self.log.len())?;
        Ok(self.penalty() + 0.5 * cap + (1.0 / self.delta).ln())
    }

    /// Log volume for the gaussian family (quadratic excess loss); `None`
    /// otherwise or when the Gram matrix is singular.
    pub fn log_volume(&self) -> Option<f64> {
        if !self.family.is_quadratic() {
            return None;
        }
        let g = self.log.gram();
        let ch = g.clone().cholesky()?;
        // excess(u) = 0.5 u'Gu + h'u with u = theta - ref
        let h = g * &self.reference - self.log.moment();
        let shift = 0.5 * h.dot(&ch.solve(&h));
        ellipsoid_log_volume(g, self.beta + shift)
    }
}

/// `log vol {u : 0.5 u' A u <= r}` for positive definite `A`.
pub fn ellipsoid_log_volume(a: &DMatrix<f64>, r: f64) -> Option<f64> {
    if r < 0.0 {
        return Some(f64::NEG_INFINITY);
    }
    let d = a.nrows() as f64;
    let ch = a.clone().cholesky()?;
    let logdet = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let log_unit_ball = 0.5 * d * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(0.5 * d + 1.0);
    Some(log_unit_ball + 0.5 * d * (2.0 * r).ln() - 0.5 * logdet)
}

/// Likelihood-ratio set anchored at the ridge estimate (learning rate 1):
/// `beta = |theta_hat|^2 / (2 gamma^2) + 0.5 log det(gamma^2 M Lambda + I) + log(1/delta)`.
pub fn analytic_adaptive_set(log: &ObservationLog, family: GlmFamily, gamma: f64, delta: f64) -> Result<LikelihoodRatioSet> {
    check_delta(delta)?;
    let reference = ridge_mle(log, family, gamma, 1.0)?.solution;
    let gain = info_gain_bound(log.gram(), family.smoothness(), gamma, 1.0)?;
    let beta = reference.norm_squared() / (2.0 * gamma * gamma) + gain + (1.0 / delta).ln();
    let reference_loss = log.total_loss(family, reference.as_slice())?;
    Ok(LikelihoodRatioSet {
        family,
        log: log.clone(),
        reference,
        reference_loss,
        beta,
        delta,
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BregmanBallSet {
    family: GlmFamily,
    log: ObservationLog,
    center: DVector<f64>,
    radius: f64,
    delta: f64,
    b: f64,
    kappa: f64,
}

impl BregmanBallSet {
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Psi(theta) = sum_t psi(<X_t, theta>)`.
    pub fn psi_total(&self, theta: &[f64]) -> f64 {
        self.log
            .covariates()
            .iter()
            .map(|x| self.family.log_partition(dot(theta, x)))
            .sum()
    }

    /// `B_Psi(theta, theta_prime)`.
    pub fn bregman(&self, theta: &[f64], theta_prime: &[f64]) -> Result<f64> {
        check_theta(self.log.dim(), theta)?;
        check_theta(self.log.dim(), theta_prime)?;
        let mut v = 0.0;
        for x in self.log.covariates() {
            let z = dot(theta, x);
            let zp = dot(theta_prime, x);
            v += self.family.log_partition(z) - self.family.log_partition(zp) - self.family.mean(zp) * (z - zp);
        }
        Ok(v.max(0.0))
    }
}

/// Bregman ball around the polar-constrained MLE with radius
/// `d log(1 + 2 kappa) + 2 log(1/delta)`, `kappa = M / m(b)`. Valid at a fixed
/// sample size for covariates chosen independently of the labels.
pub fn transductive_set(log: &ObservationLog, family: GlmFamily, b: f64, delta: f64) -> Result<BregmanBallSet> {
    check_delta(delta)?;
    let kappa = family.condition_number(b)?;
    let d = log.dim() as f64;
    let radius = d * (2.0 * kappa).ln_1p() + 2.0 * (1.0 / delta).ln();
    let center = constrained_mle(log, family, b)?.solution;
    Ok(BregmanBallSet {
        family,
        log: log.clone(),
        center,
        radius,
        delta,
        b,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelEllipsoid {
    covariates: Vec<Vec<f64>>,
    pseudo_labels: Vec<f64>,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    offset: f64,
    beta: f64,
    delta: f64,
    regret: RegretTerm,
    strong_convexity: f64,
}

impl PseudoLabelEllipsoid {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mode(&self) -> WidthMode {
        self.regret.mode
    }

    pub fn regret(&self) -> RegretTerm {
        self.regret
    }

    pub fn pseudo_labels(&self) -> &[f64] {
        &self.pseudo_labels
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `0.5 theta' Lambda theta - <theta, moment> + offset`.
    pub fn quadratic_form(&self, theta: &[f64]) -> Result<f64> {
        check_theta(self.gram.nrows(), theta)?;
        let t = DVector::from_column_slice(theta);
        Ok(0.5 * t.dot(&(&self.gram * &t)) - t.dot(&self.moment) + self.offset)
    }

    /// `0.5 sum_t (<theta, X_t> - Yhat_t)^2`.
    pub fn definitional_sum(&self, theta: &[f64]) -> Result<f64> {
        check_theta(self.gram.nrows(), theta)?;
        Ok(self
            .covariates
            .iter()
            .zip(&self.pseudo_labels)
            .map(|(x, y)| {
                let r = dot(theta, x) - y;
                0.5 * r * r
            })
            .sum())
    }

    /// Least-squares center `Lambda^+ moment`.
    pub fn center(&self) -> DVector<f64> {
        let d = self.gram.nrows();
        if d == 0 {
            return DVector::zeros(0);
        }
        let pinv = self
            .gram
            .clone()
            .pseudo_inverse(1e-12 * self.gram.amax().max(1e-300))
            .unwrap_or_else(|_| DMatrix::zeros(d, d));
        pinv * &self.moment
    }

    /// Semi-axis lengths `sqrt(2 r / eig_i)` of the ellipsoid, `r` being the
    /// width left after centering; infinite along null directions.
    pub fn semi_axes(&self) -> Vec<f64> {
        let c = self.center();
        let r = self.beta - self.quadratic_form(c.as_slice()).unwrap_or(f64::INFINITY);
        let eig = self.gram.clone().symmetric_eigenvalues();
        let top = eig.amax();
        eig.iter()
            .map(|&e| {
                if r < 0.0 {
                    0.0
                } else if e <= 1e-12 * top.max(1e-300) {
                    f64::INFINITY
                } else {
                    (2.0 * r / e).sqrt()
                }
            })
            .collect()
    }

    /// Log volume, when the Gram matrix is positive definite.
    pub fn log_volume(&self) -> Option<f64> {
        let c = self.center();
        let r = self.beta - self.quadratic_form(c.as_slice()).ok()?;
        ellipsoid_log_volume(&self.gram, r)
    }
}

/// Ellipsoid from precomputed sufficient statistics.
pub fn pseudo_label_ellipsoid(
    log: &ObservationLog,
    pseudo_labels: &[f64],
    strong_convexity: f64,
    regret: RegretTerm,
    delta: f64,
) -> Result<PseudoLabelEllipsoid> {
    check_delta(delta)?;
    if !(strong_convexity > 0.0) {
        return Err(Error::StrongConvexityUnavailable(strong_convexity));
    }
    if pseudo_labels.len() != log.len() {
        return Err(Error::DimensionMismatch {
            expected: log.len(),
            got: pseudo_labels.len(),
        });
    }
    ensure_finite_slice("pseudo-labels", pseudo_labels)?;
    if !regret.value.is_finite() {
        return Err(Error::InvalidArgument(format!("regret term must be finite, got {}", regret.value)));
    }
    let d = log.dim();
    let mut moment = DVector::zeros(d);
    let mut offset = 0.0;
    for (x, &yh) in log.covariates().iter().zip(pseudo_labels) {
        for i in 0..d {
            moment[i] += yh * x[i];
        }
        offset += 0.5 * yh * yh;
    }
    let m = strong_convexity;
    let beta = 2.0 / m * regret.value + 4.0 / m * (1.0 / delta).ln();
    Ok(PseudoLabelEllipsoid {
        covariates: log.covariates().to_vec(),
        pseudo_labels: pseudo_labels.to_vec(),
        gram: log.gram().clone(),
        moment,
        offset,
        beta,
        delta,
        regret,
        strong_convexity: m,
    })
}

/// Pseudo-label set for a deterministic forecaster: `beta = (2/m) regret + (4/m) log(1/delta)`.
pub fn algorithmic_det_set(
    log: &ObservationLog,
    pseudo_labels: &[f64],
    strong_convexity: f64,
    regret: RegretTerm,
    delta: f64,
) -> Result<PseudoLabelEllipsoid> {
    pseudo_label_ellipsoid(log, pseudo_labels, strong_convexity, regret, delta)
}

/// Predictions of the ridge follow-the-regularized-leader forecaster:
/// `theta_t` is the ridge estimate on rounds `1..t-1`. Returns the truncated
/// pseudo-labels and the forecaster's per-round losses `loss_t(theta_t)`.
pub fn ftrl_pseudo_labels(log: &ObservationLog, family: GlmFamily, gamma: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut labels = Vec::with_capacity(log.len());
    let mut losses = Vec::with_capacity(log.len());
    let mut past = ObservationLog::new(log.dim());
    for (x, y) in log.iter() {
        let theta = ridge_mle(&past, family, gamma, 1.0)?.solution;
        let z = dot(theta.as_slice(), x);
        labels.push(truncate(z, b)?);
        losses.push(family.loss_at(z, y));
        past.push(x.to_vec(), y)?;
    }
    Ok((labels, losses))
}

/// Pseudo-labels `∫ clamp(<theta, X_t>, -b, b) dq_{t+1}` along the EWA chain
/// started at `prior`, together with the per-round mix losses.
pub fn ewa_pseudo_labels(prior: &Posterior, log: &ObservationLog, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut post = prior.clone();
    let mut labels = Vec::with_capacity(log.len());
    let mut mix = Vec::with_capacity(log.len());
    for (x, y) in log.iter() {
        mix.push(-post.update_in_place(x, y)? / post.lambda());
        labels.push(pseudo_label(&post, x, b)?);
    }
    Ok((labels, mix))
}

/// Pseudo-label set for the EWA forecaster. `prior` must use learning rate 1/2;
/// in oracle mode `regret` is the realized regret against the true parameter.
pub fn ewa_alg_set(
    prior: &Posterior,
    log: &ObservationLog,
    b: f64,
    delta: f64,
    regret: RegretTerm,
) -> Result<PseudoLabelEllipsoid> {
    if (prior.lambda() - 0.5).abs() > 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "EWA pseudo-label sets need learning rate 1/2, got {}",
            prior.lambda()
        )));
    }
    let m = prior.family().strong_convexity_at(b)?;
    let (labels, _) = ewa_pseudo_labels(prior, log, b)?;
    pseudo_label_ellipsoid(log, &labels, m, regret, delta)
}

/// Deployable width for `s`-sparse parameters:
/// `(4s/m) log(2 e d sqrt(1 + M B^2 Linf^2 n / 2) / s) + (4/m) log(2 sqrt(e) / delta)`.
#[allow(clippy::too_many_arguments)]
pub fn sparse_width(n: usize, d: usize, s: usize, smoothness: f64, b_norm: f64, l_inf: f64, m: f64, delta: f64) -> Result<f64> {
    if s == 0 || s > d {
        return Err(Error::InvalidArgument(format!("sparsity must lie in 1..={d}, got {s}")));
    }
    check_delta(delta)?;
    if !(m > 0.0) {
        return Err(Error::StrongConvexityUnavailable(m));
    }
    let e = std::f64::consts::E;
    let s_f = s as f64;
    let root = (1.0 + smoothness * b_norm * b_norm * l_inf * l_inf * n as f64 / 2.0).sqrt();
    Ok(4.0 * s_f / m * (2.0 * e * d as f64 * root / s_f).ln() + 4.0 / m * (2.0 * e.sqrt() / delta).ln())
}

/// Any of the three set shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfidenceSet {
    LikelihoodRatio(LikelihoodRatioSet),
    BregmanBall(BregmanBallSet),
    PseudoLabel(PseudoLabelEllipsoid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub beta: f64,
    /// Ellipsoid semi-axes (pseudo-label sets, and gaussian Bregman balls).
    pub semi_axes: Option<Vec<f64>>,
    pub radius: Option<f64>,
    /// Distance from the anchor to the boundary along `-e_i` and `+e_i`.
    pub axis_extents: Vec<(f64, f64)>,
}

impl WidthReport {
    /// Mean over coordinates of the half-extent along each axis.
    pub fn mean_half_extent(&self) -> f64 {
        if self.axis_extents.is_empty() {
            return 0.0;
        }
        self.axis_extents.iter().map(|(a, b)| 0.5 * (a + b)).sum::<f64>() / self.axis_extents.len() as f64
    }
}

const EXTENT_TOL: f64 = 1e-6;
const EXTENT_CAP: f64 = 1e12;

impl ConfidenceSet {
    pub fn type_name(&self) -> &'static str {
        match self {
            ConfidenceSet::LikelihoodRatio(_) => "likelihood_ratio",
            ConfidenceSet::BregmanBall(_) => "bregman_ball",
            ConfidenceSet::PseudoLabel(_) => "pseudo_label_ellipsoid",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConfidenceSet::LikelihoodRatio(s) => s.log.dim(),
            ConfidenceSet::BregmanBall(s) => s.log.dim(),
            ConfidenceSet::PseudoLabel(s) => s.gram.nrows(),
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            ConfidenceSet::LikelihoodRatio(s) => s.beta,
            ConfidenceSet::BregmanBall(s) => s.radius,
            ConfidenceSet::PseudoLabel(s) => s.beta,
        }
    }

    pub fn mode(&self) -> Option<WidthMode> {
        match self {
            ConfidenceSet::PseudoLabel(s) => Some(s.regret.mode),
            _ => None,
        }
    }

    /// Reference point, ball center or least-squares center.
    pub fn anchor(&self) -> DVector<f64> {
        match self {
            ConfidenceSet::LikelihoodRatio(s) => s.reference.clone(),
            ConfidenceSet::BregmanBall(s) => s.center.clone(),
            ConfidenceSet::PseudoLabel(s) => s.center(),
        }
    }

    /// The set's defining (non-strict) inequality.
    pub fn contains(&self, theta: &[f64]) -> Result<bool> {
        Ok(match self {
            ConfidenceSet::LikelihoodRatio(s) => s.excess_loss(theta)? <= s.beta,
            ConfidenceSet::BregmanBall(s) => s.bregman(theta, s.center.as_slice())? <= s.radius,
            ConfidenceSet::PseudoLabel(s) => s.quadratic_form(theta)? <= s.beta,
        })
    }

    fn extent(&self, anchor: &DVector<f64>, dir: &DVector<f64>) -> Result<f64> {
        let member = |t: f64| -> Result<bool> { self.contains((anchor + dir * t).as_slice()) };
        if !member(0.0)? {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while member(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > EXTENT_CAP {
                return Ok(f64::INFINITY);
            }
        }
        while hi - lo > EXTENT_TOL {
            let mid = 0.5 * (lo + hi);
            if member(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    pub fn width_report(&self) -> Result<WidthReport> {
        let d = self.dim();
        let anchor = self.anchor();
        let mut axis_extents = Vec::with_capacity(d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            let plus = self.extent(&anchor, &e)?;
            let minus = self.extent(&anchor, &(-e))?;
            axis_extents.push((minus, plus));
        }
        let (semi_axes, radius) = match self {
            ConfidenceSet::LikelihoodRatio(_) => (None, None),
            ConfidenceSet::BregmanBall(s) => {
                let axes = s.family.is_quadratic().then(|| {
                    let eig = s.log.gram().clone().symmetric_eigenvalues();
                    eig.iter()
                        .map(|&e| if e > 0.0 { (2.0 * s.radius / e).sqrt() } else { f64::INFINITY })
                        .collect()
                });
                (axes, Some(s.radius))
            }
            ConfidenceSet::PseudoLabel(s) => (Some(s.semi_axes()), None),
        };
        Ok(WidthReport {
            beta: self.beta(),
            semi_axes,
            radius,
            axis_extents,
        })
    }

    /// JSON descriptor: type tag, anchor, width, Gram entries (row-major), delta, mode.
    pub fn descriptor(&self) -> serde_json::Value {
        let (gram, delta) = match self {
            ConfidenceSet::LikelihoodRatio(s) => (s.log.gram(), s.delta),
            ConfidenceSet::BregmanBall(s) => (s.log.gram(), s.delta),
            ConfidenceSet::PseudoLabel(s) => (&s.gram, s.delta),
        };
        let mut v = json!({
            "type": self.type_name(),
            "center": self.anchor().as_slice(),
            "width": self.beta(),
            "gram": gram_row_major(gram),
            "dim": self.dim(),
            "delta": delta,
            "mode": self.mode().map(WidthMode::name),
        });
        if let ConfidenceSet::BregmanBall(s) = self {
            v["b"] = json!(s.b);
            v["kappa"] = json!(s.kappa);
        }
        v
    }
}

impl From<LikelihoodRatioSet> for ConfidenceSet {
    fn from(s: LikelihoodRatioSet) -> Self {
        ConfidenceSet::LikelihoodRatio(s)
    }
}

impl From<BregmanBallSet> for ConfidenceSet {
    fn from(s: BregmanBallSet) -> Self {
        ConfidenceSet::BregmanBall(s)
    }
}

impl From<PseudoLabelEllipsoid> for ConfidenceSet {
    fn from(s: PseudoLabelEllipsoid) -> Self {
        ConfidenceSet::PseudoLabel(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasters::{telescoped_regret, replay_regret};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn random_log(family: GlmFamily, d: usize, n: usize, seed: u64) -> ObservationLog {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..d).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        let mut log = ObservationLog::new(d);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y = family.sample_label(dot(&theta, &x), &mut rng).unwrap();
            log.push(x, y).unwrap();
        }
        log
    }

    #[test]
    fn analytic_empty_log() {
        let s = analytic_adaptive_set(&ObservationLog::new(2), GlmFamily::Gaussian, 1.0, 0.05).unwrap();
        assert_eq!(s.reference(), &DVector::zeros(2));
        assert_abs_diff_eq!(s.beta(), 20f64.ln(), epsilon = 1e-14);
        let set = ConfidenceSet::from(s);
        assert!(set.contains(&[1e6, -1e6]).unwrap());
    }

    #[test]
    fn analytic_scalar_example() {
        let mut log = ObservationLog::new(1);
        for _ in 0..4 {
            log.push(vec![1.0], 1.0).unwrap();
        }
        let s = analytic_adaptive_set(&log, GlmFamily::Gaussian, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(s.reference()[0], 0.8, epsilon = 1e-12);
        let oracle = 0.32 + 0.5 * 5f64.ln() + 20f64.ln();
        assert_abs_diff_eq!(s.beta(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(s.beta(), 4.1204, epsilon = 1e-4);
        assert_abs_diff_eq!(s.worst_case_beta(1.0), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rank_adaptive_beta(1.0).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn analytic_boundary_is_member() {
        let log = random_log(GlmFamily::Logistic, 2, 30, 1);
        let s = analytic_adaptive_set(&log, GlmFamily::Logistic, 1.0, 0.1).unwrap();
        let set = ConfidenceSet::from(s.clone());
        let report = set.width_report().unwrap();
        let (_, plus) = report.axis_extents[0];
        let inside = s.reference()[0] + plus;
        assert!(set.contains(&[inside, s.reference()[1]]).unwrap());
        assert!(!set.contains(&[inside + 2e-6, s.reference()[1]]).unwrap());
        assert!(set.contains(s.reference().as_slice()).unwrap());
    }

    #[test]
    fn transductive_examples() {
        let log = random_log(GlmFamily::Gaussian, 2, 20, 2);
        let s = transductive_set(&log, GlmFamily::Gaussian, 1e6, 0.1).unwrap();
        assert_abs_diff_eq!(s.radius(), 2.0 * 3f64.ln() + 2.0 * 10f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.radius(), 6.8024, epsilon = 1e-4);
        // gaussian Bregman is half the Lambda-norm
        let theta = [0.4, -1.2];
        let c = s.center().clone();
        let u = DVector::from_column_slice(&theta) - &c;
        let quad = 0.5 * u.dot(&(log.gram() * &u));
        assert_abs_diff_eq!(s.bregman(&theta, c.as_slice()).unwrap(), quad, epsilon = 1e-9);
        assert_eq!(s.bregman(c.as_slice(), c.as_slice()).unwrap(), 0.0);

        let mut log1 = ObservationLog::new(1);
        log1.push(vec![1.0], 1.0).unwrap();
        log1.push(vec![-0.5], 0.0).unwrap();
        let s = transductive_set(&log1, GlmFamily::Logistic, 1.0, 0.05).unwrap();
        let mu1 = 1.0 / (1.0 + (-1f64).exp());
        let kappa = 0.25 / (mu1 * (1.0 - mu1));
        assert_abs_diff_eq!(s.kappa(), kappa, epsilon = 1e-14);
        assert_abs_diff_eq!(s.kappa(), 1.2715, epsilon = 1e-4);
        // 30-digit evaluation of log(1 + 2 kappa) + 2 log 20
        assert_abs_diff_eq!(s.radius(), 1.264_996_584_533_540_3 + 2.0 * 20f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn det_set_examples() {
        let mut log = ObservationLog::new(1);
        log.push(vec![1.0], 0.3).unwrap();
        let e = pseudo_label_ellipsoid(&log, &[0.0], 1.0, RegretTerm::oracle(0.0), 0.05).unwrap();
        assert_abs_diff_eq!(e.beta(), 4.0 * 20f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(e.beta(), 11.9829, epsilon = 1e-4);
        let set = ConfidenceSet::from(e.clone());
        assert_eq!(set.contains(&[2.0]).unwrap(), 2.0 <= e.beta());
        let e2 = pseudo_label_ellipsoid(&log, &[0.0], 1.0, RegretTerm::oracle(1.5), 0.05).unwrap();
        assert_abs_diff_eq!(e2.beta() - e.beta(), 3.0, epsilon = 1e-13);
        assert!(matches!(
            pseudo_label_ellipsoid(&log, &[0.0], 0.0, RegretTerm::oracle(0.0), 0.05),
            Err(Error::StrongConvexityUnavailable(_))
        ));
    }

    #[test]
    fn ellipsoid_membership_interval() {
        let mut log = ObservationLog::new(1);
        for _ in 0..4 {
            log.push(vec![1.0], 0.0).unwrap();
        }
        let mut e = pseudo_label_ellipsoid(&log, &[0.0; 4], 1.0, RegretTerm::oracle(0.0), 0.5).unwrap();
        e.beta = 2.0;
        let set = ConfidenceSet::from(e);
        assert!(set.contains(&[1.0]).unwrap());
        assert!(set.contains(&[-1.0]).unwrap());
        assert!(!set.contains(&[1.0 + 1e-9]).unwrap());
        let r = set.width_report().unwrap();
        assert_abs_diff_eq!(r.semi_axes.unwrap()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_form_matches_definition() {
        let log = random_log(GlmFamily::Gaussian, 3, 25, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(44);
        let labels: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = pseudo_label_ellipsoid(&log, &labels, 1.0, RegretTerm::oracle(2.0), 0.05).unwrap();
        for _ in 0..1000 {
            let th: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a = e.quadratic_form(&th).unwrap();
            let b = e.definitional_sum(&th).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn ewa_set_point_mass_reduces_to_det() {
        let log = random_log(GlmFamily::Gaussian, 1, 10, 5);
        let pm = Posterior::point_mass(GlmFamily::Gaussian, &[0.3], 0.5).unwrap();
        let e = ewa_alg_set(&pm, &log, 1.0, 0.05, RegretTerm::oracle(0.7)).unwrap();
        let labels: Vec<f64> = log.covariates().iter().map(|x| (0.3 * x[0]).clamp(-1.0, 1.0)).collect();
        let d = algorithmic_det_set(&log, &labels, 1.0, RegretTerm::oracle(0.7), 0.05).unwrap();
        assert_eq!(e.beta(), d.beta());
        assert!(e
            .pseudo_labels()
            .iter()
            .zip(&labels)
            .all(|(a, b)| (a - b).abs() < 1e-15));

        let empty = ewa_alg_set(&pm, &ObservationLog::new(1), 1.0, 0.05, RegretTerm::oracle(0.0)).unwrap();
        assert_abs_diff_eq!(empty.beta(), 4.0 * 20f64.ln(), epsilon = 1e-13);
        assert!(ConfidenceSet::from(empty).contains(&[1e9]).unwrap());

        let wrong = Posterior::conjugate(1, 1.0, 1.0).unwrap();
        assert!(ewa_alg_set(&wrong, &log, 1.0, 0.05, RegretTerm::oracle(0.0)).is_err());
    }

    #[test]
    fn ewa_regret_two_ways() {
        let log = random_log(GlmFamily::Gaussian, 1, 10, 6);
        let prior = Posterior::conjugate(1, 1.0, 0.5).unwrap();
        let a = telescoped_regret(&prior, &log, &[0.2]).unwrap();
        let (b, _) = replay_regret(&prior, &log, &[0.2]).unwrap();
        let ea = ewa_alg_set(&prior, &log, 2.0, 0.05, RegretTerm::oracle(a)).unwrap();
        let eb = ewa_alg_set(&prior, &log, 2.0, 0.05, RegretTerm::oracle(b)).unwrap();
        assert!((ea.beta() - eb.beta()).abs() <= 1e-8);
    }

    #[test]
    fn sparse_width_examples() {
        let v = sparse_width(100, 10, 1, 0.25, 1.0, 1.0, 1.0, 0.05).unwrap();
        assert!((v - 37.944).abs() <= 1e-3, "{v}");
        let e = std::f64::consts::E;
        let v0 = sparse_width(0, 10, 2, 0.25, 1.0, 1.0, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(v0, 8.0 * (e * 10.0).ln() + 4.0 * (2.0 * e.sqrt() / 0.05).ln(), epsilon = 1e-12);
        assert!(sparse_width(1, 10, 0, 1.0, 1.0, 1.0, 1.0, 0.05).is_err());
        assert!(sparse_width(1, 10, 11, 1.0, 1.0, 1.0, 1.0, 0.05).is_err());
        let base = sparse_width(50, 10, 2, 1.0, 1.0, 1.0, 1.0, 0.05).unwrap();
        assert!(sparse_width(51, 10, 2, 1.0, 1.0, 1.0, 1.0, 0.05).unwrap() >= base);
        assert!(sparse_width(50, 11, 2, 1.0, 1.0, 1.0, 1.0, 0.05).unwrap() >= base);
        assert!(sparse_width(50, 10, 2, 2.0, 1.0, 1.0, 1.0, 0.05).unwrap() >= base);
        assert!(sparse_width(50, 10, 2, 1.0, 2.0, 1.0, 1.0, 0.05).unwrap() >= base);
        assert!(sparse_width(50, 10, 2, 1.0, 1.0, 2.0, 1.0, 0.05).unwrap() >= base);
        assert!(sparse_width(50, 10, 2, 1.0, 1.0, 1.0, 1.0, 0.01).unwrap() >= base);
    }

    #[test]
    fn descriptor_has_required_fields() {
        let log = random_log(GlmFamily::Gaussian, 2, 5, 7);
        let set = ConfidenceSet::from(analytic_adaptive_set(&log, GlmFamily::Gaussian, 1.0, 0.05).unwrap());
        let v = set.descriptor();
        assert_eq!(v["type"], "likelihood_ratio");
        assert_eq!(v["gram"].as_array().unwrap().len(), 4);
        assert_eq!(v["delta"], 0.05);
        assert!(v["center"].is_array());
        assert!(v["width"].is_number());
    }

    #[test]
    fn gaussian_lr_volume_matches_closed_form() {
        let log = random_log(GlmFamily::Gaussian, 2, 30, 9);
        let s = analytic_adaptive_set(&log, GlmFamily::Gaussian, 1.0, 0.05).unwrap();
        let lv = s.log_volume().unwrap();
        // the set is an ellipse; compare with area pi * a * b from its axes
        let g = log.gram();
        let theta_ls = g.clone().cholesky().unwrap().solve(&log.moment());
        let excess_min = s.excess_loss(theta_ls.as_slice()).unwrap();
        let r = s.beta() - excess_min;
        let eig = g.clone().symmetric_eigenvalues();
        let area = std::f64::consts::PI * (2.0 * r / eig[0]).sqrt() * (2.0 * r / eig[1]).sqrt();
        assert_abs_diff_eq!(lv, area.ln(), epsilon = 1e-9);
    }
}
