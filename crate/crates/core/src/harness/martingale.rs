//! Monte Carlo checks of the mixture likelihood-ratio martingale
//! `M_n = prod_t p_t(Y_t) / p(Y_t | X_t, theta_star)` and its shifted variant.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{ForecasterSpec, ScenarioConfig};
use super::output::{binomial_margin, Row};
use super::scenario::{simulate, Scenario};
use crate::error::Result;
use crate::family::dot;
use crate::forecasters::{ewa_init, shifted_mix_loss};

/// Allowance for rounding when a chain reproduces `theta_star` exactly.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub checkpoints: Vec<usize>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `|mean - 1| <= 3 SE` at each checkpoint.
    pub within_three_se: Vec<bool>,
    /// Fraction of replications with `sup_{t <= N} log M_t >= log(1/delta)`.
    pub crossing_frequency: f64,
    /// `delta + 3 sqrt(delta (1 - delta) / R)`.
    pub crossing_threshold: f64,
    pub replications: usize,
    pub eta: f64,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl MartingaleReport {
    pub fn passes(&self) -> bool {
        self.within_three_se.iter().all(|b| *b) && self.crossing_frequency <= self.crossing_threshold
    }
}

struct Path {
    log_m: Vec<f64>,
    /// First round at which `log M_t >= log(1/delta)`.
    first_crossing: Option<usize>,
}

fn simulate_path(cfg: &ScenarioConfig, scen: &Scenario, spec: &ForecasterSpec, rep: usize, eta: f64, checkpoints: &[usize]) -> Result<Path> {
    let data = simulate(cfg, scen, rep, cfg.horizon)?;
    let theta = data.theta_star.as_slice();
    let mut post = ewa_init(cfg.family, cfg.dim, &spec.prior(theta), spec.lambda(), spec.grid())?;
    let threshold = (1.0 / cfg.delta).ln();
    let fast = eta == 1.0 && spec.lambda() == 1.0;
    let mut log_m = 0.0;
    let mut first_crossing = None;
    let mut at_checkpoints = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;
    for (t, (x, y)) in data.log.iter().enumerate() {
        let own = cfg.family.loss_at(dot(theta, x), y);
        if fast {
            // the update returns log ∫ exp(-loss) dq_t directly
            log_m += own + post.update_in_place(x, y)?;
        } else {
            log_m += own - shifted_mix_loss(&post, x, y, theta, eta)?;
            post.update_in_place(x, y)?;
        }
        if first_crossing.is_none() && log_m >= threshold {
            first_crossing = Some(t + 1);
        }
        while next_cp < checkpoints.len() && checkpoints[next_cp] == t + 1 {
            at_checkpoints.push(log_m);
            next_cp += 1;
        }
    }
    Ok(Path {
        log_m: at_checkpoints,
        first_crossing,
    })
}

fn validate(cfg: &ScenarioConfig, eta: f64) -> Result<MartingaleReport> {
    let spec = cfg.validate_forecaster()?.clone();
    crate::family::check_eta(eta)?;
    let checkpoints: Vec<usize> = cfg.checkpoints().into_iter().filter(|&n| n >= 1 && n <= cfg.horizon).collect();
    let scen = Scenario::draw(cfg);
    let paths: Vec<Path> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| simulate_path(cfg, &scen, &spec, r, eta, &checkpoints))
        .collect::<Result<_>>()?;

    let reps = cfg.replications as f64;
    let set_type = if eta == 1.0 { "martingale" } else { "shifted_martingale" };
    let log_threshold = (1.0 / cfg.delta).ln();
    let mut rows = Vec::new();
    for (r, p) in paths.iter().enumerate() {
        for (ci, &n) in checkpoints.iter().enumerate() {
            let crossed = p.first_crossing.is_some_and(|t| t <= n);
            rows.push(Row {
                rep: r.to_string(),
                checkpoint: n.to_string(),
                set_type: set_type.into(),
                mode: spec.name().into(),
                covered: if crossed { 0.0 } else { 1.0 },
                beta: log_threshold,
                width_metric: p.log_m[ci].exp(),
                extra: json!({ "log_m": p.log_m[ci], "eta": eta }),
            });
        }
    }

    let mut mean = Vec::with_capacity(checkpoints.len());
    let mut std_error = Vec::with_capacity(checkpoints.len());
    let mut within = Vec::with_capacity(checkpoints.len());
    for (ci, &n) in checkpoints.iter().enumerate() {
        let vals: Vec<f64> = paths.iter().map(|p| p.log_m[ci].exp()).collect();
        let m = vals.iter().sum::<f64>() / reps;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1.0)
        } else {
            0.0
        };
        let se = (var / reps).sqrt();
        let ok = (m - 1.0).abs() <= 3.0 * se + ROUNDING_SLACK;
        let crossed = paths.iter().filter(|p| p.first_crossing.is_some_and(|t| t <= n)).count() as f64 / reps;
        rows.push(Row {
            rep: "summary".into(),
            checkpoint: n.to_string(),
            set_type: set_type.into(),
            mode: spec.name().into(),
            covered: 1.0 - crossed,
            beta: m,
            width_metric: se,
            extra: json!({ "mean": m, "std_error": se, "within_three_se": ok, "crossing_frequency": crossed }),
        });
        mean.push(m);
        std_error.push(se);
        within.push(ok);
    }
    let crossing_frequency = paths.iter().filter(|p| p.first_crossing.is_some()).count() as f64 / reps;
    let crossing_threshold = cfg.delta + binomial_margin(cfg.delta, cfg.replications);
    rows.push(Row {
        rep: "summary".into(),
        checkpoint: "all".into(),
        set_type: set_type.into(),
        mode: spec.name().into(),
        covered: 1.0 - crossing_frequency,
        beta: log_threshold,
        width_metric: f64::NAN,
        extra: json!({
            "crossing_frequency": crossing_frequency,
            "threshold": crossing_threshold,
            "pass": crossing_frequency <= crossing_threshold,
            "scope": "sup over all rounds",
        }),
    });
    Ok(MartingaleReport {
        checkpoints,
        mean,
        std_error,
        within_three_se: within,
        crossing_frequency,
        crossing_threshold,
        replications: cfg.replications,
        eta,
        rows,
    })
}

/// Plain mixture martingale (the config's `eta` is ignored).
pub fn martingale_validate(cfg: &ScenarioConfig) -> Result<MartingaleReport> {
    validate(cfg, 1.0)
}

/// Martingale built from the `eta`-shifted mixture losses.
pub fn shifted_martingale_validate(cfg: &ScenarioConfig, eta: f64) -> Result<MartingaleReport> {
    validate(cfg, eta)
}
