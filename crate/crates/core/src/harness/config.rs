//! Scenario configuration (JSON).

use serde::{Deserialize, Serialize};

use crate::confsets::WidthMode;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::forecasters::{GridSpec, Prior, MAX_GRID_DIM, MAX_SPARSE_DIM};

/// How the true parameter is chosen. Random variants draw from the scenario
/// stream (stream 0), so every replication shares the same `theta_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaStarSpec {
    Explicit { value: Vec<f64> },
    /// Uniform direction, Euclidean norm `norm`.
    Sphere { norm: f64 },
    /// Uniform support of size `s`, Gaussian direction on it, norm `norm`.
    Sparse { s: usize, norm: f64 },
}

impl ThetaStarSpec {
    /// Declared norm bound, when the spec implies one.
    pub fn norm_bound(&self) -> f64 {
        match self {
            ThetaStarSpec::Explicit { value } => value.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ThetaStarSpec::Sphere { norm } | ThetaStarSpec::Sparse { norm, .. } => *norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovariateProcess {
    /// Entries iid `N(0, scale^2)`.
    IidGaussian { scale: f64 },
    /// Entries iid uniform on `[-scale, scale]`.
    IidUniform { scale: f64 },
    /// Cycles through `points`; when absent, `horizon` gaussian points with
    /// entries `N(0, scale^2)` are drawn once from the scenario stream.
    FixedDesign {
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `X_t = scale * U g_t`, `U` a random orthonormal `d x rank` basis drawn
    /// from the scenario stream, `g_t ~ N(0, I_rank)`.
    Subspace { rank: usize, scale: f64 },
    /// Greedy information design: each round draws `pool` candidates uniformly
    /// on the sphere of radius `scale` and picks the maximizer of
    /// `x'(Lambda + I)^{-1} x + label_weight * <(Lambda + I)^{-1} sum_s Y_s X_s, x>`.
    /// The label term makes the design depend on past labels.
    AdaptiveGreedy {
        scale: f64,
        #[serde(default = "default_pool")]
        pool: usize,
        #[serde(default = "one")]
        label_weight: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_pool() -> usize {
    16
}

impl CovariateProcess {
    pub fn name(&self) -> &'static str {
        match self {
            CovariateProcess::IidGaussian { .. } => "iid_gaussian",
            CovariateProcess::IidUniform { .. } => "iid_uniform",
            CovariateProcess::FixedDesign { .. } => "fixed_design",
            CovariateProcess::Subspace { .. } => "subspace",
            CovariateProcess::AdaptiveGreedy { .. } => "adaptive_greedy",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, CovariateProcess::AdaptiveGreedy { .. })
    }
}

/// A confidence-set construction to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// Likelihood-ratio set around the ridge estimate.
    Analytic {
        gamma: f64,
        /// Covariate norm bound for the worst-case and rank-adaptive widths;
        /// defaults to the observed maximum.
        #[serde(default)]
        l: Option<f64>,
    },
    /// Bregman ball around the polar-constrained MLE (fixed n).
    Transductive { b: f64 },
    /// Ridge follow-the-leader pseudo-labels; realized regret only.
    DetAlgorithmic { gamma: f64, b: f64 },
    /// EWA pseudo-labels at learning rate 1/2 with a Gaussian prior.
    EwaAlgorithmic {
        gamma: f64,
        b: f64,
        mode: WidthMode,
        /// Declared `|theta_star|` bound, needed in bound mode.
        #[serde(default)]
        norm_bound: Option<f64>,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    /// EWA with the sparse subset prior (scale `norm_bound`).
    SparseEwa {
        s: usize,
        norm_bound: f64,
        l_inf: f64,
        b: f64,
        mode: WidthMode,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
}

impl SetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SetSpec::Analytic { .. } => "analytic",
            SetSpec::Transductive { .. } => "transductive",
            SetSpec::DetAlgorithmic { .. } => "det_algorithmic",
            SetSpec::EwaAlgorithmic { .. } => "ewa_algorithmic",
            SetSpec::SparseEwa { .. } => "sparse_ewa",
        }
    }

    /// Polar constraint the true parameter must satisfy.
    pub fn polar_b(&self) -> Option<f64> {
        match self {
            SetSpec::Analytic { .. } => None,
            SetSpec::Transductive { b }
            | SetSpec::DetAlgorithmic { b, .. }
            | SetSpec::EwaAlgorithmic { b, .. }
            | SetSpec::SparseEwa { b, .. } => Some(*b),
        }
    }

    /// `oracle`, `bound`, or `closed_form` for widths without a regret term.
    pub fn mode_name(&self) -> &'static str {
        match self {
            SetSpec::Analytic { .. } | SetSpec::Transductive { .. } => "closed_form",
            SetSpec::DetAlgorithmic { .. } => WidthMode::Oracle.name(),
            SetSpec::EwaAlgorithmic { mode, .. } | SetSpec::SparseEwa { mode, .. } => mode.name(),
        }
    }

    /// The default construction for a `--set` override.
    pub fn default_named(name: &str, dim: usize) -> Result<Self> {
        Ok(match name {
            "analytic" => SetSpec::Analytic { gamma: 1.0, l: None },
            "transductive" => SetSpec::Transductive { b: 1.0 },
            "det_algorithmic" => SetSpec::DetAlgorithmic { gamma: 1.0, b: 1.0 },
            "ewa_algorithmic" => SetSpec::EwaAlgorithmic {
                gamma: 1.0,
                b: 1.0,
                mode: WidthMode::Oracle,
                norm_bound: None,
                grid: None,
            },
            "sparse_ewa" => SetSpec::SparseEwa {
                s: 1.min(dim),
                norm_bound: 1.0,
                l_inf: 1.0,
                b: 1.0,
                mode: WidthMode::Bound,
                grid: None,
            },
            other => return Err(Error::Config(format!("unknown set type '{other}'"))),
        })
    }
}

/// Forecaster whose predictive drives the martingale and regret audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForecasterSpec {
    Gaussian {
        gamma: f64,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    Sparse {
        gamma: f64,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    /// All mass on the true parameter.
    PointMass {
        #[serde(default = "one")]
        lambda: f64,
    },
}

impl ForecasterSpec {
    pub fn lambda(&self) -> f64 {
        match self {
            ForecasterSpec::Gaussian { lambda, .. }
            | ForecasterSpec::Sparse { lambda, .. }
            | ForecasterSpec::PointMass { lambda } => *lambda,
        }
    }

    pub fn grid(&self) -> Option<GridSpec> {
        match self {
            ForecasterSpec::Gaussian { grid, .. } | ForecasterSpec::Sparse { grid, .. } => *grid,
            ForecasterSpec::PointMass { .. } => None,
        }
    }

    pub fn prior(&self, theta_star: &[f64]) -> Prior {
        match self {
            ForecasterSpec::Gaussian { gamma, .. } => Prior::Gaussian { scale: *gamma },
            ForecasterSpec::Sparse { gamma, .. } => Prior::SparseGaussian { scale: *gamma },
            ForecasterSpec::PointMass { .. } => Prior::PointMass {
                theta: theta_star.to_vec(),
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ForecasterSpec::Gaussian { .. } => "gaussian",
            ForecasterSpec::Sparse { .. } => "sparse",
            ForecasterSpec::PointMass { .. } => "point_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub family: GlmFamily,
    pub dim: usize,
    pub theta_star: ThetaStarSpec,
    pub covariates: CovariateProcess,
    pub horizon: usize,
    /// Defaults to `{1, 2, 4, ...} ∪ {horizon}`.
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
    /// Extra polar constraint on `theta_star`, on top of those implied by the sets.
    #[serde(default)]
    pub polar_b: Option<f64>,
    #[serde(default)]
    pub sets: Vec<SetSpec>,
    #[serde(default)]
    pub forecaster: Option<ForecasterSpec>,
    /// Shift for the shifted martingale; `None` means the plain one.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            family: GlmFamily::Gaussian,
            dim: 2,
            theta_star: ThetaStarSpec::Sphere { norm: 1.0 },
            covariates: CovariateProcess::IidGaussian { scale: 1.0 },
            horizon: 100,
            checkpoints: None,
            delta: 0.05,
            replications: 100,
            seed: 0,
            polar_b: None,
            sets: vec![SetSpec::Analytic { gamma: 1.0, l: None }],
            forecaster: None,
            eta: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("invalid scenario JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sorted, deduplicated checkpoints in `1..=horizon`.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut cps = match &self.checkpoints {
            Some(c) => c.clone(),
            None => {
                let mut v = Vec::new();
                let mut k = 1;
                while k < self.horizon {
                    v.push(k);
                    k *= 2;
                }
                v.push(self.horizon);
                v
            }
        };
        cps.sort_unstable();
        cps.dedup();
        cps
    }

    /// Tightest polar constraint declared anywhere in the config.
    pub fn polar_b(&self) -> Option<f64> {
        self.sets
            .iter()
            .filter_map(SetSpec::polar_b)
            .chain(self.polar_b)
            .reduce(f64::min)
    }

    /// Checks shared by every subcommand.
    pub fn validate_common(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(config_err("dim must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_err(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        match &self.theta_star {
            ThetaStarSpec::Explicit { value } => {
                if value.len() != self.dim {
                    return Err(config_err(format!(
                        "explicit theta_star has {} entries, dim is {}",
                        value.len(),
                        self.dim
                    )));
                }
                if value.iter().any(|v| !v.is_finite()) {
                    return Err(config_err("explicit theta_star must be finite"));
                }
            }
            ThetaStarSpec::Sphere { norm } => {
                if !(norm.is_finite() && *norm >= 0.0) {
                    return Err(config_err(format!("theta_star norm must be nonnegative, got {norm}")));
                }
            }
            ThetaStarSpec::Sparse { s, norm } => {
                if *s == 0 || *s > self.dim {
                    return Err(config_err(format!("theta_star sparsity must lie in 1..={}, got {s}", self.dim)));
                }
                if !(norm.is_finite() && *norm >= 0.0) {
                    return Err(config_err(format!("theta_star norm must be nonnegative, got {norm}")));
                }
            }
        }
        match &self.covariates {
            CovariateProcess::IidGaussian { scale } | CovariateProcess::IidUniform { scale } => positive("covariate scale", *scale)?,
            CovariateProcess::FixedDesign { points, scale } => {
                positive("covariate scale", *scale)?;
                if let Some(p) = points {
                    if p.is_empty() {
                        return Err(config_err("fixed design needs at least one point"));
                    }
                    if p.iter().any(|x| x.len() != self.dim || x.iter().any(|v| !v.is_finite())) {
                        return Err(config_err(format!("fixed design points must be finite with {} entries", self.dim)));
                    }
                }
            }
            CovariateProcess::Subspace { rank, scale } => {
                positive("covariate scale", *scale)?;
                if *rank == 0 || *rank > self.dim {
                    return Err(config_err(format!("subspace rank must lie in 1..={}, got {rank}", self.dim)));
                }
            }
            CovariateProcess::AdaptiveGreedy { scale, pool, label_weight } => {
                positive("covariate scale", *scale)?;
                if *pool == 0 {
                    return Err(config_err("adaptive pool must be at least 1"));
                }
                if !label_weight.is_finite() {
                    return Err(config_err("label_weight must be finite"));
                }
            }
        }
        if let Some(b) = self.polar_b {
            positive("polar_b", b)?;
        }
        Ok(())
    }

    /// Checks for the coverage and width experiments.
    pub fn validate_sets(&self) -> Result<()> {
        self.validate_common()?;
        if self.horizon == 0 {
            return Err(config_err("horizon must be at least 1"));
        }
        if self.sets.is_empty() {
            return Err(config_err("no confidence sets configured"));
        }
        if let Some(c) = &self.checkpoints {
            if c.iter().any(|&n| n == 0 || n > self.horizon) {
                return Err(config_err(format!("checkpoints must lie in 1..={}", self.horizon)));
            }
        }
        for set in &self.sets {
            match set {
                SetSpec::Analytic { gamma, l } => {
                    positive("gamma", *gamma)?;
                    if let Some(l) = l {
                        positive("l", *l)?;
                    }
                }
                SetSpec::Transductive { b } => {
                    positive("b", *b)?;
                    if self.covariates.is_adaptive() {
                        return Err(config_err(
                            "transductive sets need covariates drawn obliviously; the adaptive_greedy process is not allowed",
                        ));
                    }
                }
                SetSpec::DetAlgorithmic { gamma, b } => {
                    positive("gamma", *gamma)?;
                    positive("b", *b)?;
                }
                SetSpec::EwaAlgorithmic {
                    gamma,
                    b,
                    mode,
                    norm_bound,
                    ..
                } => {
                    positive("gamma", *gamma)?;
                    positive("b", *b)?;
                    if !self.family.is_quadratic() && self.dim > MAX_GRID_DIM {
                        return Err(Error::UnsupportedDimension {
                            what: "grid EWA forecaster",
                            dim: self.dim,
                            limit: MAX_GRID_DIM,
                        });
                    }
                    if *mode == WidthMode::Bound {
                        let nb = norm_bound.ok_or_else(|| config_err("ewa_algorithmic in bound mode needs norm_bound"))?;
                        positive("norm_bound", nb)?;
                        if self.theta_star.norm_bound() > nb * (1.0 + 1e-12) {
                            return Err(config_err("theta_star norm exceeds the declared norm_bound"));
                        }
                    }
                }
                SetSpec::SparseEwa {
                    s,
                    norm_bound,
                    l_inf,
                    b,
                    ..
                } => {
                    positive("norm_bound", *norm_bound)?;
                    positive("l_inf", *l_inf)?;
                    positive("b", *b)?;
                    if *s == 0 || *s > self.dim {
                        return Err(config_err(format!("sparsity must lie in 1..={}, got {s}", self.dim)));
                    }
                    if self.dim > MAX_SPARSE_DIM {
                        return Err(Error::UnsupportedDimension {
                            what: "sparse EWA forecaster",
                            dim: self.dim,
                            limit: MAX_SPARSE_DIM,
                        });
                    }
                    if self.theta_star.norm_bound() > norm_bound * (1.0 + 1e-12) {
                        return Err(config_err("theta_star norm exceeds the declared norm_bound"));
                    }
                    let support_ok = match &self.theta_star {
                        ThetaStarSpec::Sparse { s: k, .. } => k <= s,
                        ThetaStarSpec::Explicit { value } => value.iter().filter(|v| **v != 0.0).count() <= *s,
                        ThetaStarSpec::Sphere { .. } => self.dim <= *s,
                    };
                    if !support_ok {
                        return Err(config_err("theta_star is not declared s-sparse"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks for the martingale and regret audits.
    pub fn validate_forecaster(&self) -> Result<&ForecasterSpec> {
        self.validate_common()?;
        let f = self
            .forecaster
            .as_ref()
            .ok_or_else(|| config_err("no forecaster configured"))?;
        positive("lambda", f.lambda())?;
        match f {
            ForecasterSpec::Gaussian { gamma, .. } => {
                positive("gamma", *gamma)?;
                if !self.family.is_quadratic() && self.dim > MAX_GRID_DIM {
                    return Err(Error::UnsupportedDimension {
                        what: "grid EWA forecaster",
                        dim: self.dim,
                        limit: MAX_GRID_DIM,
                    });
                }
            }
            ForecasterSpec::Sparse { gamma, .. } => {
                positive("gamma", *gamma)?;
                if self.dim > MAX_SPARSE_DIM {
                    return Err(Error::UnsupportedDimension {
                        what: "sparse EWA forecaster",
                        dim: self.dim,
                        limit: MAX_SPARSE_DIM,
                    });
                }
            }
            ForecasterSpec::PointMass { .. } => {}
        }
        if let Some(c) = &self.checkpoints {
            if c.iter().any(|&n| n == 0 || n > self.horizon) {
                return Err(config_err(format!("checkpoints must lie in 1..={}", self.horizon)));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(config_err(format!("eta must lie in (0, 1], got {eta}")));
            }
        }
        Ok(f)
    }
}
