//! Maximum-likelihood anchors for the confidence sets.
//!
//! * [`ridge_mle`] minimizes `lambda * sum_t loss_t(theta) + |theta|^2 / (2 gamma^2)`
//!   with damped Newton and Armijo backtracking.
//! * [`constrained_mle`] minimizes `sum_t loss_t` over the polar set
//!   `{theta : max_t |<theta, X_t>| <= b}`. It first tries an unconstrained
//!   Newton solve and falls back to accelerated projected gradient, projecting
//!   with Dykstra's algorithm over the slabs.
//! * [`restricted_mle`] solves the ridge problem with coordinates outside a
//!   support fixed at zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{dot, GlmFamily};
use crate::observations::ObservationLog;

const ARMIJO: f64 = 1e-4;
const NEWTON_CAP: usize = 200;
const DIVERGENCE_NORM: f64 = 1e6;
const DYKSTRA_SWEEPS: usize = 10_000;
const DYKSTRA_TOL: f64 = 1e-8;
const BARRIER_GAP: f64 = 1e-11;
const ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: DVector<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveReport {
    /// Turns a non-converged report into an error.
    pub fn into_result(self, operation: &'static str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                operation,
                iterations: self.iterations,
                gradient_norm: self.gradient_norm,
            })
        }
    }
}

/// `lambda * sum_t loss_t(theta) + |theta|^2 / (2 gamma^2)`; `gamma = inf`
/// drops the regularizer.
struct Objective<'a> {
    family: GlmFamily,
    log: &'a ObservationLog,
    lambda: f64,
    inv_gamma_sq: f64,
}

impl Objective<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for (x, y) in self.log.iter() {
            s += self.family.loss_at(dot(theta.as_slice(), x), y);
        }
        self.lambda * s + 0.5 * self.inv_gamma_sq * theta.norm_squared()
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut g = theta * self.inv_gamma_sq;
        for (x, y) in self.log.iter() {
            let r = self.lambda * (self.family.mean(dot(theta.as_slice(), x)) - y);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += r * xi;
            }
        }
        g
    }

    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let d = theta.len();
        let mut h = DMatrix::identity(d, d) * self.inv_gamma_sq;
        for (x, _) in self.log.iter() {
            let w = self.lambda * self.family.variance(dot(theta.as_slice(), x));
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] += w * x[i] * x[j];
                }
            }
        }
        h
    }
}

fn validate_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_labels(family: GlmFamily, log: &ObservationLog) -> Result<()> {
    log.labels().iter().try_for_each(|&y| family.check_label(y))
}

/// Solves `H p = -g`, adding Levenberg damping when `H` is numerically singular.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let d = g.len();
    let scale = h.diagonal().amax().max(1e-300);
    let mut damping = 0.0;
    loop {
        let hd = h + DMatrix::identity(d, d) * damping;
        if let Some(ch) = hd.cholesky() {
            let p = ch.solve(&(-g));
            if p.iter().all(|v| v.is_finite()) {
                return p;
            }
        }
        damping = if damping == 0.0 { 1e-12 * scale } else { damping * 10.0 };
        if damping > 1e12 * scale {
            return -g;
        }
    }
}

fn newton(obj: &Objective<'_>, start: DVector<f64>, rel_tol: f64, guard_divergence: bool) -> SolveReport {
    let mut theta = start;
    let mut f = obj.value(&theta);
    let mut g = obj.gradient(&theta);
    let tol = rel_tol * g.norm().max(1.0);
    let mut iterations = 0;
    while g.norm() > tol && iterations < NEWTON_CAP {
        iterations += 1;
        let h = obj.hessian(&theta);
        let p = newton_direction(&h, &g);
        let slope = g.dot(&p);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-16 {
            let cand = &theta + &p * t;
            let fc = obj.value(&cand);
            if fc <= f + ARMIJO * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            // Near the optimum the predicted decrease is below the resolution
            // of f; accept a full step that still shrinks the gradient.
            if t == 1.0 && (fc - f).abs() <= 1e-13 * (1.0 + f.abs()) {
                let gc = obj.gradient(&cand);
                if gc.norm() < g.norm() {
                    accepted = Some((cand, fc.min(f)));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                theta = cand;
                f = fc;
                g = obj.gradient(&theta);
            }
            None => break,
        }
        if guard_divergence && theta.norm() > DIVERGENCE_NORM {
            break;
        }
    }
    let gradient_norm = g.norm();
    SolveReport {
        converged: gradient_norm <= tol && theta.iter().all(|v| v.is_finite()),
        objective: obj.value(&theta),
        solution: theta,
        gradient_norm,
        iterations,
    }
}

/// Ridge-regularized MLE `argmin lambda * sum_t loss_t + |theta|^2 / (2 gamma^2)`.
///
/// Converges to a gradient norm of `1e-10 * max(1, |grad at 0|)`; a solve that
/// misses this target is reported as [`Error::NoConvergence`].
pub fn ridge_mle(log: &ObservationLog, family: GlmFamily, gamma: f64, lambda: f64) -> Result<SolveReport> {
    validate_scale("gamma", gamma)?;
    validate_scale("lambda", lambda)?;
    check_labels(family, log)?;
    let obj = Objective {
        family,
        log,
        lambda,
        inv_gamma_sq: 1.0 / (gamma * gamma),
    };
    newton(&obj, DVector::zeros(log.dim()), 1e-10, false).into_result("ridge_mle")
}

/// Ridge MLE over the coordinates in `support` (0-based); all other
/// coordinates of the solution are zero.
pub fn restricted_mle(
    log: &ObservationLog,
    family: GlmFamily,
    support: &[usize],
    gamma: f64,
    lambda: f64,
) -> Result<SolveReport> {
    validate_scale("gamma", gamma)?;
    validate_scale("lambda", lambda)?;
    let sub = log.restrict(support)?;
    let inner = if support.is_empty() {
        check_labels(family, log)?;
        let zero = DVector::zeros(0);
        let obj = Objective {
            family,
            log: &sub,
            lambda,
            inv_gamma_sq: 1.0 / (gamma * gamma),
        };
        SolveReport {
            objective: obj.value(&zero),
            solution: zero,
            gradient_norm: 0.0,
            iterations: 0,
            converged: true,
        }
    } else {
        ridge_mle(&sub, family, gamma, lambda)?
    };
    let mut full = DVector::zeros(log.dim());
    for (k, &i) in support.iter().enumerate() {
        full[i] = inner.solution[k];
    }
    Ok(SolveReport { solution: full, ..inner })
}

fn max_abs_margin(log: &ObservationLog, theta: &DVector<f64>) -> f64 {
    log.covariates()
        .iter()
        .map(|x| dot(theta.as_slice(), x).abs())
        .fold(0.0, f64::max)
}

/// Euclidean projection onto `{theta : |<theta, x_t>| <= b for all t}` by
/// Dykstra's alternating projections over the slabs.
pub fn project_polar(log: &ObservationLog, b: f64, point: &DVector<f64>) -> DVector<f64> {
    let slabs: Vec<(&[f64], f64)> = log
        .covariates()
        .iter()
        .map(|x| (x.as_slice(), dot(x, x)))
        .filter(|(_, nsq)| *nsq > 0.0)
        .collect();
    let d = point.len();
    let mut x = point.clone();
    if slabs.iter().all(|(a, _)| dot(x.as_slice(), a).abs() <= b) {
        return x;
    }
    let mut increments = vec![DVector::<f64>::zeros(d); slabs.len()];
    for _ in 0..DYKSTRA_SWEEPS {
        let mut change = 0.0f64;
        for (k, (a, nsq)) in slabs.iter().enumerate() {
            let z = &x + &increments[k];
            let s = dot(z.as_slice(), a);
            let proj = if s.abs() <= b {
                z.clone()
            } else {
                let excess = s - s.clamp(-b, b);
                let mut p = z.clone();
                for (pi, ai) in p.iter_mut().zip(a.iter()) {
                    *pi -= excess * ai / nsq;
                }
                p
            };
            change = change.max((&proj - &x).amax());
            increments[k] = z - &proj;
            x = proj;
        }
        let violation = slabs
            .iter()
            .map(|(a, _)| (dot(x.as_slice(), a).abs() - b).max(0.0))
            .fold(0.0, f64::max);
        if change <= DYKSTRA_TOL * 1e-4 * (1.0 + x.amax()) && violation <= DYKSTRA_TOL * b {
            break;
        }
    }
    // Pull residual violations back along the ray to the origin, which is
    // always feasible.
    let worst = slabs
        .iter()
        .map(|(a, _)| dot(x.as_slice(), a).abs())
        .fold(0.0, f64::max);
    if worst > b {
        x *= b / worst;
    }
    x
}

/// MLE constrained to the polar set `S_{n,b}`.
///
/// Interior solutions come from plain Newton. Otherwise a log-barrier path
/// gets within a duality gap of `1e-11 * max(1, |f|)`, and Newton on the
/// active slabs (as equalities) polishes the result; `gradient_norm` is then
/// the KKT residual. The minimizer can be non-unique on flat faces; any
/// point meeting the tolerances is returned.
pub fn constrained_mle(log: &ObservationLog, family: GlmFamily, b: f64) -> Result<SolveReport> {
    validate_scale("b", b)?;
    if log.is_empty() {
        return Err(Error::InvalidArgument("constrained_mle needs at least one round".into()));
    }
    check_labels(family, log)?;
    let obj = Objective {
        family,
        log,
        lambda: 1.0,
        inv_gamma_sq: 0.0,
    };
    let free = newton(&obj, DVector::zeros(log.dim()), 1e-10, true);
    if free.converged && max_abs_margin(log, &free.solution) <= b + 1e-9 {
        return Ok(free);
    }

    let start = match max_abs_margin(log, &free.solution) {
        m if free.solution.iter().all(|v| v.is_finite()) && m.is_finite() && m > 0.0 => &free.solution * (0.5 * b / m),
        _ => DVector::zeros(log.dim()),
    };
    let (barrier_sol, gap_ok) = barrier_path(&obj, log, b, start);
    if let Some(polished) = polish_active_set(&obj, log, b, &barrier_sol) {
        return Ok(polished);
    }
    let residual = obj.gradient(&barrier_sol).norm();
    SolveReport {
        converged: gap_ok,
        objective: obj.value(&barrier_sol),
        solution: barrier_sol,
        gradient_norm: residual,
        iterations: 0,
    }
    .into_result("constrained_mle")
}

/// Slabs `|<a, theta>| <= b` with nonzero normals.
fn slab_normals(log: &ObservationLog) -> Vec<&[f64]> {
    log.covariates()
        .iter()
        .map(|x| x.as_slice())
        .filter(|x| x.iter().any(|v| *v != 0.0))
        .collect()
}

/// Log-barrier path `f(theta) - mu sum_t [ln(b - z_t) + ln(b + z_t)]` from a
/// strictly feasible start, shrinking `mu` until the duality gap `2 n mu`
/// is below `BARRIER_GAP * max(1, |f|)`. Returns the last iterate and whether
/// the gap target was reached.
fn barrier_path(obj: &Objective<'_>, log: &ObservationLog, b: f64, start: DVector<f64>) -> (DVector<f64>, bool) {
    let slabs = slab_normals(log);
    let d = start.len();
    let phi = |theta: &DVector<f64>, mu: f64| -> f64 {
        let mut v = obj.value(theta);
        for a in &slabs {
            let z = dot(theta.as_slice(), a);
            if z.abs() >= b {
                return f64::INFINITY;
            }
            v -= mu * ((b - z).ln() + (b + z).ln());
        }
        v
    };
    let mut theta = start;
    let mut mu = 1.0;
    let m = 2.0 * slabs.len() as f64;
    loop {
        for _ in 0..NEWTON_CAP {
            let mut g = obj.gradient(&theta);
            let mut h = obj.hessian(&theta);
            for a in &slabs {
                let z = dot(theta.as_slice(), a);
                let (lo, hi) = (1.0 / (b + z), 1.0 / (b - z));
                let av = DVector::from_column_slice(a);
                g += &av * (mu * (hi - lo));
                h.ger(mu * (hi * hi + lo * lo), &av, &av, 1.0);
            }
            let p = newton_direction(&h, &g);
            let decrement = -g.dot(&p);
            let f0 = phi(&theta, mu);
            if decrement <= 1e-14 * (1.0 + f0.abs()) {
                break;
            }
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-16 {
                let cand = &theta + &p * t;
                let fc = phi(&cand, mu);
                if fc.is_finite() && fc <= f0 - ARMIJO * t * decrement {
                    theta = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let f = obj.value(&theta);
        if m * mu <= BARRIER_GAP * f.abs().max(1.0) || d == 0 {
            return (theta, true);
        }
        if mu < 1e-300 {
            return (theta, false);
        }
        mu *= 0.1;
    }
}

/// Refines a near-optimal point by Newton on the active constraints held as
/// equalities; returns it when it is feasible with nonnegative multipliers
/// and a KKT residual below tolerance.
fn polish_active_set(obj: &Objective<'_>, log: &ObservationLog, b: f64, near: &DVector<f64>) -> Option<SolveReport> {
    let d = near.len();
    // signed active normals, keeping a linearly independent subset
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for a in slab_normals(log) {
        let z = dot(near.as_slice(), a);
        if b - z.abs() > ACTIVE_TOL * b {
            continue;
        }
        let row = DVector::from_column_slice(a) * z.signum();
        let mut r = row.clone();
        for q in &basis {
            r -= q * q.dot(&r);
        }
        if r.norm() > 1e-9 * row.norm() && basis.len() < d {
            basis.push(&r / r.norm());
            rows.push(row);
        }
    }
    let k = rows.len();
    let mut theta = near.clone();
    let mut nu = DVector::zeros(k);
    let g0 = obj.gradient(&theta).norm().max(1.0);
    let tol = 1e-9 * g0;
    for _ in 0..50 {
        let g = obj.gradient(&theta);
        let h = obj.hessian(&theta);
        let mut kkt = DMatrix::zeros(d + k, d + k);
        let mut rhs = DVector::zeros(d + k);
        kkt.view_mut((0, 0), (d, d)).copy_from(&h);
        for (i, a) in rows.iter().enumerate() {
            for j in 0..d {
                kkt[(d + i, j)] = a[j];
                kkt[(j, d + i)] = a[j];
            }
            rhs[d + i] = b - a.dot(&theta);
        }
        for j in 0..d {
            rhs[j] = -g[j];
        }
        let sol = kkt.lu().solve(&rhs)?;
        let step = sol.rows(0, d).into_owned();
        nu = sol.rows(d, k).into_owned();
        theta += &step;
        if step.amax() <= 1e-15 * (1.0 + theta.amax()) {
            break;
        }
    }
    let mut residual = obj.gradient(&theta);
    for (a, &n) in rows.iter().zip(nu.iter()) {
        residual += a * n;
    }
    let worst = max_abs_margin(log, &theta);
    let feasible = worst <= b * (1.0 + 1e-12);
    let dual_ok = nu.iter().all(|&n| n >= -1e-8 * g0);
    if !(feasible && dual_ok && residual.norm() <= tol && theta.iter().all(|v| v.is_finite())) {
        return None;
    }
    if worst > b {
        theta *= b / worst;
    }
    Some(SolveReport {
        objective: obj.value(&theta),
        gradient_norm: residual.norm(),
        solution: theta,
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn log_of(family: GlmFamily, rows: &[(Vec<f64>, f64)]) -> ObservationLog {
        let d = rows.first().map_or(1, |r| r.0.len());
        let xs: Vec<_> = rows.iter().map(|r| r.0.clone()).collect();
        let ys: Vec<_> = rows.iter().map(|r| r.1).collect();
        ObservationLog::from_rounds(family, d, &xs, &ys).unwrap()
    }

    fn random_log(family: GlmFamily, d: usize, n: usize, seed: u64) -> ObservationLog {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut log = ObservationLog::new(d);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y = family.sample_label(dot(&theta, &x), &mut rng).unwrap();
            log.push(x, y).unwrap();
        }
        log
    }

    #[test]
    fn ridge_empty_log_is_zero() {
        for fam in [GlmFamily::Gaussian, GlmFamily::Logistic] {
            let r = ridge_mle(&ObservationLog::new(3), fam, 1.0, 1.0).unwrap();
            assert_eq!(r.solution, DVector::zeros(3));
        }
    }

    #[test]
    fn ridge_scalar_gaussian() {
        let log = log_of(GlmFamily::Gaussian, &[(vec![1.0, 0.0], 3.0)]);
        let r = ridge_mle(&log, GlmFamily::Gaussian, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(r.solution[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.solution[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ridge_logistic_matches_grid_search() {
        let rows: Vec<_> = (0..20).map(|i| (vec![1.0], if i < 14 { 1.0 } else { 0.0 })).collect();
        let log = log_of(GlmFamily::Logistic, &rows);
        let r = ridge_mle(&log, GlmFamily::Logistic, 10.0, 1.0).unwrap();
        // independent oracle: dense 1-d grid search, step 1e-4
        let f = |t: f64| {
            14.0 * (-(t) + GlmFamily::Logistic.log_partition(t))
                + 6.0 * GlmFamily::Logistic.log_partition(t)
                + t * t / 200.0
        };
        let mut best = (f64::INFINITY, 0.0);
        let mut t = -5.0;
        while t <= 5.0 {
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
            t += 1e-4;
        }
        assert!((r.solution[0] - best.1).abs() < 1e-3);
        assert!(r.gradient_norm <= 1e-10 * 20.0);
    }

    #[test]
    fn ridge_gaussian_matches_closed_form() {
        for seed in 0..5 {
            let log = random_log(GlmFamily::Gaussian, 3, 30, seed);
            let (gamma, lambda) = (0.7, 0.5);
            let r = ridge_mle(&log, GlmFamily::Gaussian, gamma, lambda).unwrap();
            let a = log.gram() * lambda + DMatrix::identity(3, 3) / (gamma * gamma);
            let closed = a.lu().solve(&(log.moment() * lambda)).unwrap();
            assert!((r.solution - closed).amax() < 1e-8);
        }
    }

    #[test]
    fn ridge_rejects_bad_scales() {
        let log = ObservationLog::new(1);
        assert!(ridge_mle(&log, GlmFamily::Gaussian, 0.0, 1.0).is_err());
        assert!(ridge_mle(&log, GlmFamily::Gaussian, 1.0, -1.0).is_err());
    }

    #[test]
    fn restricted_examples() {
        let mut log = ObservationLog::new(2);
        log.push(vec![1.0, 0.0], 2.0).unwrap();
        log.push(vec![0.0, 1.0], -1.0).unwrap();
        log.push(vec![1.0, 1.0], 0.5).unwrap();
        let fam = GlmFamily::Gaussian;
        let full = ridge_mle(&log, fam, 1.0, 1.0).unwrap();
        let all = restricted_mle(&log, fam, &[0, 1], 1.0, 1.0).unwrap();
        assert!((full.solution.clone() - all.solution).amax() < 1e-12);

        let empty = restricted_mle(&log, fam, &[], 1.0, 1.0).unwrap();
        assert_eq!(empty.solution, DVector::zeros(2));
        assert_abs_diff_eq!(empty.objective, log.total_loss(fam, &[0.0, 0.0]).unwrap(), epsilon = 1e-12);

        // S = {first}: 1-d ridge on x_1 = (1, 0, 1), y = (2, -1, 0.5)
        let one = restricted_mle(&log, fam, &[0], 1.0, 1.0).unwrap();
        let closed = (2.0 + 0.5) / (2.0 + 1.0);
        assert_abs_diff_eq!(one.solution[0], closed, epsilon = 1e-10);
        assert_eq!(one.solution[1], 0.0);
        assert!(one.objective >= full.objective - 1e-12);
    }

    #[test]
    fn constrained_inactive_equals_unconstrained() {
        let log = random_log(GlmFamily::Logistic, 2, 60, 11);
        let free = newton(
            &Objective {
                family: GlmFamily::Logistic,
                log: &log,
                lambda: 1.0,
                inv_gamma_sq: 0.0,
            },
            DVector::zeros(2),
            1e-10,
            true,
        );
        assert!(free.converged);
        let b = 2.0 * max_abs_margin(&log, &free.solution);
        let c = constrained_mle(&log, GlmFamily::Logistic, b).unwrap();
        assert!((c.solution - free.solution).amax() < 1e-8);
    }

    #[test]
    fn constrained_gaussian_projection() {
        let log = log_of(GlmFamily::Gaussian, &[(vec![1.0], 5.0), (vec![1.0], 5.0), (vec![1.0], 5.0)]);
        let c = constrained_mle(&log, GlmFamily::Gaussian, 2.0).unwrap();
        assert_abs_diff_eq!(c.solution[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn constrained_separable_logistic_hits_boundary() {
        let rows = vec![
            (vec![1.0, 0.5], 1.0),
            (vec![2.0, -0.3], 1.0),
            (vec![-1.0, 0.2], 0.0),
            (vec![-1.5, -0.8], 0.0),
            (vec![0.5, 1.0], 1.0),
            (vec![-0.4, -1.0], 0.0),
        ];
        let log = log_of(GlmFamily::Logistic, &rows);
        let c = constrained_mle(&log, GlmFamily::Logistic, 1.0).unwrap();
        let margin = max_abs_margin(&log, &c.solution);
        assert!((margin - 1.0).abs() <= 1e-6, "margin {margin}");

        // first-order condition on random feasible points
        let obj = Objective {
            family: GlmFamily::Logistic,
            log: &log,
            lambda: 1.0,
            inv_gamma_sq: 0.0,
        };
        let g = obj.gradient(&c.solution);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut probed = 0;
        while probed < 100 {
            let cand = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            if max_abs_margin(&log, &cand) > 1.0 {
                continue;
            }
            probed += 1;
            assert!((cand - &c.solution).dot(&g) >= -1e-6);
        }
    }

    #[test]
    fn constrained_objective_dominates_interior_infimum() {
        let log = random_log(GlmFamily::Gaussian, 2, 40, 3);
        let free = ridge_mle(&log, GlmFamily::Gaussian, 1e6, 1.0).unwrap();
        let b = 0.5 * max_abs_margin(&log, &free.solution);
        let c = constrained_mle(&log, GlmFamily::Gaussian, b).unwrap();
        assert!(c.objective >= free.objective - 1e-9);
        assert!(max_abs_margin(&log, &c.solution) <= b + 1e-9);
    }

    #[test]
    fn constrained_rejects_bad_input() {
        assert!(constrained_mle(&ObservationLog::new(1), GlmFamily::Gaussian, 1.0).is_err());
        let log = log_of(GlmFamily::Gaussian, &[(vec![1.0], 1.0)]);
        assert!(constrained_mle(&log, GlmFamily::Gaussian, 0.0).is_err());
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let log = random_log(GlmFamily::Gaussian, 3, 25, 8);
        let p = DVector::from_vec(vec![4.0, -3.0, 2.0]);
        let q = project_polar(&log, 0.7, &p);
        assert!(max_abs_margin(&log, &q) <= 0.7 + 1e-12);
        let qq = project_polar(&log, 0.7, &q);
        assert_eq!(q, qq);
    }
}
