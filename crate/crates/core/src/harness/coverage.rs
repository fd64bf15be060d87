//! Coverage and width experiments.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ScenarioConfig, SetSpec};
use super::output::{binomial_margin, Row};
use super::scenario::{ensure_polar, simulate, Replication, Scenario};
use crate::confsets::{
    algorithmic_det_set, analytic_adaptive_set, ftrl_pseudo_labels, ewa_pseudo_labels, pseudo_label_ellipsoid,
    sparse_width, transductive_set, ConfidenceSet, RegretTerm, WidthMode,
};
use crate::error::{Error, Result};
use crate::forecasters::{ewa_init, Prior};
use crate::infogain::{ewa_regret_bound, info_gain_bound, numerical_rank, sparse_regret_bound};
use crate::observations::ObservationLog;

/// Which number goes into the `width_metric` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthMetric {
    /// Mean over coordinates of the half-chord through the anchor.
    MeanHalfExtent,
    /// Log volume where it has a closed form, else the mean half-extent.
    LogVolume,
}

impl WidthMetric {
    fn name(self) -> &'static str {
        match self {
            WidthMetric::MeanHalfExtent => "mean_half_extent",
            WidthMetric::LogVolume => "log_volume",
        }
    }
}

const SOURCE_REALIZED: &str = "realized_vs_theta_star";
const SOURCE_BOUND: &str = "uniform_bound";
const SOURCE_NONE: &str = "none";

struct Eval {
    set: ConfidenceSet,
    source: &'static str,
    extra: Value,
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// Builds the set described by `spec` on every checkpoint prefix of one replication.
fn build_sets(cfg: &ScenarioConfig, spec: &SetSpec, rep: &Replication, checkpoints: &[usize]) -> Result<Vec<Eval>> {
    let family = cfg.family;
    let delta = cfg.delta;
    let theta = rep.theta_star.as_slice();
    if let Some(b) = spec.polar_b() {
        ensure_polar(theta, &rep.log, b)?;
    }
    let prefixes: Vec<ObservationLog> = checkpoints.iter().map(|&n| rep.log.prefix(n)).collect();
    let comparator = |log: &ObservationLog| log.total_loss(family, theta);
    let mut out = Vec::with_capacity(checkpoints.len());
    match spec {
        SetSpec::Analytic { gamma, l } => {
            for log in &prefixes {
                let set = analytic_adaptive_set(log, family, *gamma, delta)?;
                let l = l.unwrap_or_else(|| log.max_norm());
                let extra = json!({
                    "worst_case_beta": set.worst_case_beta(l),
                    "rank_adaptive_beta": set.rank_adaptive_beta(l)?,
                    "numerical_rank": numerical_rank(log.gram()),
                    "l": l,
                });
                out.push(Eval {
                    set: set.into(),
                    source: SOURCE_NONE,
                    extra,
                });
            }
        }
        SetSpec::Transductive { b } => {
            for log in &prefixes {
                let set = transductive_set(log, family, *b, delta)?;
                let extra = json!({ "kappa": set.kappa() });
                out.push(Eval {
                    set: set.into(),
                    source: SOURCE_NONE,
                    extra,
                });
            }
        }
        SetSpec::DetAlgorithmic { gamma, b } => {
            let m = family.strong_convexity_at(*b)?;
            let (labels, losses) = ftrl_pseudo_labels(&rep.log, family, *gamma, *b)?;
            let cum = prefix_sums(&losses);
            for (log, &n) in prefixes.iter().zip(checkpoints) {
                let regret = cum[n] - comparator(log)?;
                let set = algorithmic_det_set(log, &labels[..n], m, RegretTerm::oracle(regret), delta)?;
                out.push(Eval {
                    set: set.into(),
                    source: SOURCE_REALIZED,
                    extra: json!({ "regret": regret, "m": m }),
                });
            }
        }
        SetSpec::EwaAlgorithmic {
            gamma,
            b,
            mode,
            norm_bound,
            grid,
        } => {
            let m = family.strong_convexity_at(*b)?;
            let prior = ewa_init(family, cfg.dim, &Prior::Gaussian { scale: *gamma }, 0.5, *grid)?;
            let (labels, mix) = ewa_pseudo_labels(&prior, &rep.log, *b)?;
            let cum = prefix_sums(&mix);
            for (log, &n) in prefixes.iter().zip(checkpoints) {
                let (regret, source) = match mode {
                    WidthMode::Oracle => (RegretTerm::oracle(cum[n] - comparator(log)?), SOURCE_REALIZED),
                    WidthMode::Bound => {
                        let nb = norm_bound.expect("validated");
                        let gain = info_gain_bound(log.gram(), family.smoothness(), *gamma, 0.5)?;
                        let rho = nb * nb / (2.0 * gamma * gamma);
                        (RegretTerm::bound(ewa_regret_bound(rho, gain, 0.5)?), SOURCE_BOUND)
                    }
                };
                let set = pseudo_label_ellipsoid(log, &labels[..n], m, regret, delta)?;
                out.push(Eval {
                    set: set.into(),
                    source,
                    extra: json!({ "regret": regret.value, "m": m }),
                });
            }
        }
        SetSpec::SparseEwa {
            s,
            norm_bound,
            l_inf,
            b,
            mode,
            grid,
        } => {
            let m = family.strong_convexity_at(*b)?;
            if *mode == WidthMode::Bound && rep.log.max_abs_entry() > *l_inf {
                return Err(Error::Config(format!(
                    "covariate entry {} exceeds the declared l_inf {l_inf}",
                    rep.log.max_abs_entry()
                )));
            }
            let prior = ewa_init(family, cfg.dim, &Prior::SparseGaussian { scale: *norm_bound }, 0.5, *grid)?;
            let (labels, mix) = ewa_pseudo_labels(&prior, &rep.log, *b)?;
            let cum = prefix_sums(&mix);
            for (log, &n) in prefixes.iter().zip(checkpoints) {
                let (regret, source, closed) = match mode {
                    WidthMode::Oracle => (RegretTerm::oracle(cum[n] - comparator(log)?), SOURCE_REALIZED, None),
                    WidthMode::Bound => {
                        let sf = *s as f64;
                        let x = family.smoothness() * norm_bound * norm_bound * l_inf * l_inf * n as f64;
                        let gain = 0.5 * sf * (0.5 * x).ln_1p();
                        let r = sparse_regret_bound(gain, 0.5, *s, cfg.dim, 0.5)?;
                        let closed = sparse_width(n, cfg.dim, *s, family.smoothness(), *norm_bound, *l_inf, m, delta)?;
                        (RegretTerm::bound(r), SOURCE_BOUND, Some(closed))
                    }
                };
                let set = pseudo_label_ellipsoid(log, &labels[..n], m, regret, delta)?;
                out.push(Eval {
                    set: set.into(),
                    source,
                    extra: json!({ "regret": regret.value, "m": m, "closed_form_beta": closed }),
                });
            }
        }
    }
    Ok(out)
}

fn log_volume(set: &ConfidenceSet) -> Option<f64> {
    match set {
        ConfidenceSet::LikelihoodRatio(s) => s.log_volume(),
        ConfidenceSet::PseudoLabel(s) => s.log_volume(),
        ConfidenceSet::BregmanBall(_) => None,
    }
}

fn evaluate_rep(
    cfg: &ScenarioConfig,
    scen: &Scenario,
    rep_index: usize,
    checkpoints: &[usize],
    metric: WidthMetric,
) -> Result<Vec<Row>> {
    let rep = simulate(cfg, scen, rep_index, cfg.horizon)?;
    let mut rows = Vec::with_capacity(checkpoints.len() * cfg.sets.len());
    let per_set: Vec<Vec<Eval>> = cfg
        .sets
        .iter()
        .map(|spec| build_sets(cfg, spec, &rep, checkpoints))
        .collect::<Result<_>>()?;
    for (ci, &n) in checkpoints.iter().enumerate() {
        for (k, spec) in cfg.sets.iter().enumerate() {
            let ev = &per_set[k][ci];
            let covered = ev.set.contains(&rep.theta_star)?;
            let extent = ev.set.width_report()?.mean_half_extent();
            let (width, metric_used) = match metric {
                WidthMetric::LogVolume => match log_volume(&ev.set) {
                    Some(v) => (v, WidthMetric::LogVolume),
                    None => (extent, WidthMetric::MeanHalfExtent),
                },
                WidthMetric::MeanHalfExtent => (extent, WidthMetric::MeanHalfExtent),
            };
            let mut extra = json!({
                "set_index": k,
                "regret_source": ev.source,
                "width_metric": metric_used.name(),
                "mean_half_extent": extent,
                "theta_star_scale": rep.theta_scale,
                "process": cfg.covariates.name(),
            });
            if let (Value::Object(dst), Value::Object(src)) = (&mut extra, &ev.extra) {
                dst.extend(src.clone());
            }
            rows.push(Row {
                rep: rep_index.to_string(),
                checkpoint: n.to_string(),
                set_type: spec.name().to_string(),
                mode: spec.mode_name().to_string(),
                covered: if covered { 1.0 } else { 0.0 },
                beta: ev.set.beta(),
                width_metric: width,
                extra,
            });
        }
    }
    Ok(rows)
}

/// Mean ignoring NaN entries; an unbounded width makes the mean infinite.
fn mean_defined(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.filter(|x| !x.is_nan()).fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// Per-checkpoint and uniform summary rows, computed from the sorted per-replication rows.
fn summaries(cfg: &ScenarioConfig, rows: &[Row], checkpoints: &[usize]) -> Vec<Row> {
    let reps = cfg.replications;
    let margin = binomial_margin(cfg.delta, reps);
    let threshold = cfg.delta + margin;
    let mut out = Vec::new();
    let per_rep = checkpoints.len() * cfg.sets.len();
    for (k, spec) in cfg.sets.iter().enumerate() {
        let claim = match spec {
            SetSpec::Transductive { .. } => "fixed_n",
            _ => "anytime",
        };
        let mut all_covered = vec![true; reps];
        for (ci, &n) in checkpoints.iter().enumerate() {
            let sel: Vec<&Row> = (0..reps).map(|r| &rows[r * per_rep + ci * cfg.sets.len() + k]).collect();
            let covered = sel.iter().filter(|r| r.covered == 1.0).count();
            for (r, row) in sel.iter().enumerate() {
                all_covered[r] &= row.covered == 1.0;
            }
            let frac = covered as f64 / reps as f64;
            out.push(Row {
                rep: "summary".into(),
                checkpoint: n.to_string(),
                set_type: spec.name().into(),
                mode: spec.mode_name().into(),
                covered: frac,
                beta: mean_defined(sel.iter().map(|r| r.beta)),
                width_metric: mean_defined(sel.iter().map(|r| r.width_metric)),
                extra: json!({
                    "set_index": k,
                    "scope": "fixed_n",
                    "miscoverage": 1.0 - frac,
                    "margin": margin,
                    "threshold": threshold,
                    "pass": 1.0 - frac <= threshold,
                    "replications": reps,
                }),
            });
        }
        let uniform = all_covered.iter().filter(|c| **c).count() as f64 / reps as f64;
        out.push(Row {
            rep: "summary".into(),
            checkpoint: "all".into(),
            set_type: spec.name().into(),
            mode: spec.mode_name().into(),
            covered: uniform,
            beta: f64::NAN,
            width_metric: f64::NAN,
            extra: json!({
                "set_index": k,
                "scope": "uniform_over_checkpoints",
                "claim": claim,
                "miscoverage": 1.0 - uniform,
                "margin": margin,
                "threshold": threshold,
                "pass": 1.0 - uniform <= threshold,
                "replications": reps,
                "note": "theta_star in the set at every checkpoint; lower bound on the all-n event",
            }),
        });
    }
    out
}

/// Fails when a row's mode disagrees with where its regret term came from.
pub fn check_mode_metadata(rows: &[Row]) -> Result<()> {
    for r in rows.iter().filter(|r| r.rep != "summary") {
        let source = r.extra.get("regret_source").and_then(Value::as_str).unwrap_or("");
        let expected = match r.mode.as_str() {
            "oracle" => SOURCE_REALIZED,
            "bound" => SOURCE_BOUND,
            "closed_form" => SOURCE_NONE,
            _ => continue,
        };
        if source != expected {
            return Err(Error::Config(format!(
                "row rep={} checkpoint={} set={} has mode {} but regret source {source}",
                r.rep, r.checkpoint, r.set_type, r.mode
            )));
        }
    }
    Ok(())
}

fn run(cfg: &ScenarioConfig, metric: WidthMetric) -> Result<Vec<Row>> {
    cfg.validate_sets()?;
    let checkpoints = cfg.checkpoints();
    let scen = Scenario::draw(cfg);
    let per_rep: Vec<Vec<Row>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| evaluate_rep(cfg, &scen, r, &checkpoints, metric))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Row> = per_rep.into_iter().flatten().collect();
    check_mode_metadata(&rows)?;
    let summary = summaries(cfg, &rows, &checkpoints);
    rows.extend(summary);
    Ok(rows)
}

/// One row per (replication, checkpoint, set) with the membership of
/// `theta_star`, then summary rows (`rep = "summary"`).
pub fn coverage_experiment(cfg: &ScenarioConfig) -> Result<Vec<Row>> {
    run(cfg, WidthMetric::MeanHalfExtent)
}

/// Same rows with log volumes in `width_metric` where available, plus
/// worst-case and rank-adaptive widths for likelihood-ratio sets.
pub fn width_experiment(cfg: &ScenarioConfig) -> Result<Vec<Row>> {
    run(cfg, WidthMetric::LogVolume)
}
