//! Seeded data generation.
//!
//! Every random draw comes from ChaCha20 seeded with `seed_from_u64(seed)`.
//! Stream 0 holds scenario-level draws (random `theta_star`, a drawn fixed
//! design, the subspace basis); replication `r` (0-based) uses stream `r + 1`
//! and consumes its words in round order.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::config::{CovariateProcess, ScenarioConfig, ThetaStarSpec};
use crate::error::{Error, Result};
use crate::family::dot;
use crate::observations::ObservationLog;

pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn replication_rng(seed: u64, rep: usize) -> ChaCha20Rng {
    stream(seed, rep as u64 + 1)
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn scaled_to_norm(mut v: Vec<f64>, norm: f64) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a *= norm / n);
    }
    v
}

/// Draws `theta_star` from `spec`.
pub fn draw_theta_star<R: Rng>(spec: &ThetaStarSpec, dim: usize, rng: &mut R) -> Vec<f64> {
    match spec {
        ThetaStarSpec::Explicit { value } => value.clone(),
        ThetaStarSpec::Sphere { norm } => scaled_to_norm(gaussian_vec(rng, dim), *norm),
        ThetaStarSpec::Sparse { s, norm } => {
            let mut support = sample(rng, dim, *s).into_vec();
            support.sort_unstable();
            let vals = scaled_to_norm(gaussian_vec(rng, *s), *norm);
            let mut theta = vec![0.0; dim];
            for (i, v) in support.into_iter().zip(vals) {
                theta[i] = v;
            }
            theta
        }
    }
}

/// Scenario-level draws shared by all replications.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub theta_star: Vec<f64>,
    design: Option<Vec<Vec<f64>>>,
    basis: Option<DMatrix<f64>>,
}

impl Scenario {
    pub fn draw(cfg: &ScenarioConfig) -> Self {
        let mut rng = stream(cfg.seed, 0);
        let theta_star = draw_theta_star(&cfg.theta_star, cfg.dim, &mut rng);
        let design = match &cfg.covariates {
            CovariateProcess::FixedDesign { points: Some(p), .. } => Some(p.clone()),
            CovariateProcess::FixedDesign { points: None, scale } => Some(
                (0..cfg.horizon.max(1))
                    .map(|_| gaussian_vec(&mut rng, cfg.dim).into_iter().map(|v| v * scale).collect())
                    .collect(),
            ),
            _ => None,
        };
        let basis = match &cfg.covariates {
            CovariateProcess::Subspace { rank, .. } => {
                let g = DMatrix::from_fn(cfg.dim, *rank, |_, _| rng.sample::<f64, _>(StandardNormal));
                Some(g.qr().q())
            }
            _ => None,
        };
        Self {
            theta_star,
            design,
            basis,
        }
    }
}

/// One simulated stream.
#[derive(Debug, Clone)]
pub struct Replication {
    pub theta_star: Vec<f64>,
    /// Factor applied to the scenario `theta_star` to meet the polar constraint.
    pub theta_scale: f64,
    pub log: ObservationLog,
}

fn oblivious_point<R: Rng>(process: &CovariateProcess, scen: &Scenario, dim: usize, t: usize, rng: &mut R) -> Vec<f64> {
    match process {
        CovariateProcess::IidGaussian { scale } => gaussian_vec(rng, dim).into_iter().map(|v| v * scale).collect(),
        CovariateProcess::IidUniform { scale } => (0..dim).map(|_| rng.random_range(-*scale..=*scale)).collect(),
        CovariateProcess::FixedDesign { .. } => {
            let design = scen.design.as_ref().expect("fixed design drawn");
            design[t % design.len()].clone()
        }
        CovariateProcess::Subspace { scale, .. } => {
            let u = scen.basis.as_ref().expect("basis drawn");
            let g = DVector::from_vec(gaussian_vec(rng, u.ncols()));
            (u * g * *scale).as_slice().to_vec()
        }
        CovariateProcess::AdaptiveGreedy { .. } => unreachable!("adaptive covariates depend on the past"),
    }
}

fn polar_scale(max_abs_z: f64, b: Option<f64>) -> f64 {
    match b {
        Some(b) if max_abs_z > b => b / max_abs_z,
        _ => 1.0,
    }
}

/// Greedy pick from a fresh candidate pool on the sphere of radius `scale`.
fn greedy_point<R: Rng>(
    rng: &mut R,
    dim: usize,
    scale: f64,
    pool: usize,
    label_weight: f64,
    log: &ObservationLog,
) -> Vec<f64> {
    let reg = log.gram() + DMatrix::identity(dim, dim);
    let ch = reg.cholesky().expect("Lambda + I is positive definite");
    let direction = ch.solve(&log.moment());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..pool {
        let x = scaled_to_norm(gaussian_vec(rng, dim), scale);
        let xv = DVector::from_column_slice(&x);
        let score = xv.dot(&ch.solve(&xv)) + label_weight * direction.dot(&xv);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, x));
        }
    }
    best.expect("pool is nonempty").1
}

/// Simulates replication `rep` for `horizon` rounds.
pub fn simulate(cfg: &ScenarioConfig, scen: &Scenario, rep: usize, horizon: usize) -> Result<Replication> {
    let mut rng = replication_rng(cfg.seed, rep);
    simulate_with(cfg, scen, &scen.theta_star, horizon, &mut rng)
}

pub(crate) fn simulate_with<R: Rng>(
    cfg: &ScenarioConfig,
    scen: &Scenario,
    theta_raw: &[f64],
    horizon: usize,
    rng: &mut R,
) -> Result<Replication> {
    let dim = cfg.dim;
    let b = cfg.polar_b();
    let mut log = ObservationLog::new(dim);
    match &cfg.covariates {
        CovariateProcess::AdaptiveGreedy {
            scale,
            pool,
            label_weight,
        } => {
            let norm = dot(theta_raw, theta_raw).sqrt();
            let theta_scale = polar_scale(norm * scale, b);
            let theta_star: Vec<f64> = theta_raw.iter().map(|v| v * theta_scale).collect();
            for _ in 0..horizon {
                let x = greedy_point(rng, dim, *scale, *pool, *label_weight, &log);
                let y = cfg.family.sample_label(dot(&theta_star, &x), rng)?;
                log.push(x, y)?;
            }
            Ok(Replication {
                theta_star,
                theta_scale,
                log,
            })
        }
        process => {
            let xs: Vec<Vec<f64>> = (0..horizon).map(|t| oblivious_point(process, scen, dim, t, rng)).collect();
            let max_abs_z = xs.iter().map(|x| dot(theta_raw, x).abs()).fold(0.0, f64::max);
            let theta_scale = polar_scale(max_abs_z, b);
            let theta_star: Vec<f64> = theta_raw.iter().map(|v| v * theta_scale).collect();
            for x in xs {
                let y = cfg.family.sample_label(dot(&theta_star, &x), rng)?;
                log.push(x, y)?;
            }
            Ok(Replication {
                theta_star,
                theta_scale,
                log,
            })
        }
    }
}

/// Ratio of the largest to the smallest Gram eigenvalue.
pub fn eigenvalue_spread(log: &ObservationLog) -> f64 {
    let eig = log.gram().clone().symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub(crate) fn ensure_polar(theta: &[f64], log: &ObservationLog, b: f64) -> Result<()> {
    for x in log.covariates() {
        if dot(theta, x).abs() > b * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "theta_star violates the polar constraint |<theta, x>| <= {b}"
            )));
        }
    }
    Ok(())
}
