//! Python bindings for `glmcs`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use glmcs::confsets::{self, RegretTerm, WidthMode};
use glmcs::forecasters::{self, GridSpec, Posterior, Prior};
use glmcs::harness::{self, ScenarioConfig};
use glmcs::{estimators, family, infogain, Error, GlmFamily};

create_exception!(glmcs_py, NumericalError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for glmcs::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn fam(name: &str) -> PyResult<GlmFamily> {
    GlmFamily::from_name(name).py()
}

fn mode(name: &str) -> PyResult<WidthMode> {
    match name {
        "oracle" => Ok(WidthMode::Oracle),
        "bound" => Ok(WidthMode::Bound),
        other => Err(PyValueError::new_err(format!("unknown width mode {other:?}"))),
    }
}

/// Append-only record of `(x, y)` rounds.
#[pyclass(name = "ObservationLog", skip_from_py_object)]
#[derive(Clone)]
struct PyLog {
    inner: glmcs::ObservationLog,
    family: GlmFamily,
}

#[pymethods]
impl PyLog {
    #[new]
    fn new(family: &str, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: glmcs::ObservationLog::new(dim),
            family: fam(family)?,
        })
    }

    fn push(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.family.check_label(y).py()?;
        self.inner.push(x, y).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.family.name()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        let g = self.inner.gram();
        (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect()
    }

    fn prefix(&self, n: usize) -> Self {
        Self {
            inner: self.inner.prefix(n),
            family: self.family,
        }
    }

    fn total_loss(&self, theta: Vec<f64>) -> PyResult<f64> {
        self.inner.total_loss(self.family, &theta).py()
    }
}

/// Exponentially weighted average forecaster (posterior state).
#[pyclass(name = "Forecaster", skip_from_py_object)]
#[derive(Clone)]
struct PyForecaster {
    inner: Posterior,
}

#[pymethods]
impl PyForecaster {
    /// `prior` is "gaussian", "sparse" or "point_mass" (the latter needs `theta`).
    #[new]
    #[pyo3(signature = (family, dim, prior="gaussian", scale=1.0, lambda_=0.5, theta=None, grid=None))]
    fn new(
        family: &str,
        dim: usize,
        prior: &str,
        scale: f64,
        lambda_: f64,
        theta: Option<Vec<f64>>,
        grid: Option<(f64, usize)>,
    ) -> PyResult<Self> {
        let p = match prior {
            "gaussian" => Prior::Gaussian { scale },
            "sparse" => Prior::SparseGaussian { scale },
            "point_mass" => Prior::PointMass {
                theta: theta.ok_or_else(|| PyValueError::new_err("point_mass prior needs theta"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown prior {other:?}"))),
        };
        let grid = grid.map(|(half_width, nodes_per_dim)| GridSpec {
            half_width,
            nodes_per_dim,
        });
        Ok(Self {
            inner: forecasters::ewa_init(fam(family)?, dim, &p, lambda_, grid).py()?,
        })
    }

    /// Absorbs one round and returns its mix loss.
    fn update(&mut self, x: Vec<f64>, y: f64) -> PyResult<f64> {
        Ok(-self.inner.update_in_place(&x, y).py()? / self.inner.lambda())
    }

    fn mix_loss(&self, x: Vec<f64>, y: f64) -> PyResult<f64> {
        forecasters::mix_loss(&self.inner, &x, y).py()
    }

    fn shifted_mix_loss(&self, x: Vec<f64>, y: f64, theta_star: Vec<f64>, eta: f64) -> PyResult<f64> {
        forecasters::shifted_mix_loss(&self.inner, &x, y, &theta_star, eta).py()
    }

    fn pseudo_label(&self, x: Vec<f64>, b: f64) -> PyResult<f64> {
        forecasters::pseudo_label(&self.inner, &x, b).py()
    }

    fn mean(&self) -> Vec<f64> {
        self.inner.mean().as_slice().to_vec()
    }

    fn regret(&self, log: &PyLog, theta_bar: Vec<f64>) -> PyResult<f64> {
        forecasters::telescoped_regret(&self.inner, &log.inner, &theta_bar).py()
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.inner.rounds()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }
}

/// Any of the confidence-set constructions.
#[pyclass(name = "ConfidenceSet")]
struct PySet {
    inner: confsets::ConfidenceSet,
}

#[pymethods]
impl PySet {
    fn contains(&self, theta: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&theta).py()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn type_name(&self) -> &'static str {
        self.inner.type_name()
    }

    fn anchor(&self) -> Vec<f64> {
        self.inner.anchor().as_slice().to_vec()
    }

    /// Mean half extent along the coordinate axes.
    fn width(&self) -> PyResult<f64> {
        Ok(self.inner.width_report().py()?.mean_half_extent())
    }

    /// JSON description of the set.
    fn describe(&self) -> String {
        self.inner.descriptor().to_string()
    }
}

fn wrap(inner: impl Into<confsets::ConfidenceSet>) -> PySet {
    PySet { inner: inner.into() }
}

#[pyfunction]
fn negloglik(family: &str, x: Vec<f64>, y: f64, theta: Vec<f64>) -> PyResult<f64> {
    family::negloglik(fam(family)?, &x, y, &theta).py()
}

#[pyfunction]
fn d_psi(family: &str, z: f64, z_prime: f64) -> PyResult<f64> {
    family::d_psi(fam(family)?, z, z_prime).py()
}

#[pyfunction]
fn truncate(z: f64, b: f64) -> PyResult<f64> {
    family::truncate(z, b).py()
}

#[pyfunction]
#[pyo3(signature = (log, gamma, lambda_=1.0))]
fn ridge_mle(log: &PyLog, gamma: f64, lambda_: f64) -> PyResult<Vec<f64>> {
    Ok(estimators::ridge_mle(&log.inner, log.family, gamma, lambda_)
        .py()?
        .solution
        .as_slice()
        .to_vec())
}

#[pyfunction]
fn constrained_mle(log: &PyLog, b: f64) -> PyResult<Vec<f64>> {
    Ok(estimators::constrained_mle(&log.inner, log.family, b).py()?.solution.as_slice().to_vec())
}

/// `(exact or None, logdet bound, rank bound)`.
#[pyfunction]
#[pyo3(signature = (log, gamma, lambda_=1.0))]
fn info_gain(log: &PyLog, gamma: f64, lambda_: f64) -> PyResult<(Option<f64>, f64, f64)> {
    let r = infogain::info_gain_report(&log.inner, log.family, gamma, lambda_).py()?;
    Ok((r.exact, r.bound, r.rank_bound))
}

#[pyfunction]
fn analytic_set(log: &PyLog, gamma: f64, delta: f64) -> PyResult<PySet> {
    Ok(wrap(confsets::analytic_adaptive_set(&log.inner, log.family, gamma, delta).py()?))
}

#[pyfunction]
fn transductive_set(log: &PyLog, b: f64, delta: f64) -> PyResult<PySet> {
    Ok(wrap(confsets::transductive_set(&log.inner, log.family, b, delta).py()?))
}

/// Ridge follow-the-leader pseudo-label set with its realized regret against `theta_star`.
#[pyfunction]
fn det_algorithmic_set(log: &PyLog, gamma: f64, b: f64, delta: f64, theta_star: Vec<f64>) -> PyResult<PySet> {
    let (labels, losses) = confsets::ftrl_pseudo_labels(&log.inner, log.family, gamma, b).py()?;
    let regret = losses.iter().sum::<f64>() - log.inner.total_loss(log.family, &theta_star).py()?;
    let m = log.family.strong_convexity_at(b).py()?;
    Ok(wrap(
        confsets::algorithmic_det_set(&log.inner, &labels, m, RegretTerm::oracle(regret), delta).py()?,
    ))
}

/// EWA pseudo-label set; `regret` is the value plugged into the radius.
#[pyfunction]
#[pyo3(signature = (forecaster, log, b, delta, regret, mode="oracle"))]
fn ewa_algorithmic_set(
    forecaster: &PyForecaster,
    log: &PyLog,
    b: f64,
    delta: f64,
    regret: f64,
    mode: &str,
) -> PyResult<PySet> {
    let term = match self::mode(mode)? {
        WidthMode::Oracle => RegretTerm::oracle(regret),
        WidthMode::Bound => RegretTerm::bound(regret),
    };
    Ok(wrap(confsets::ewa_alg_set(&forecaster.inner, &log.inner, b, delta, term).py()?))
}

#[pyfunction]
#[pyo3(signature = (n, d, s, smoothness, b_norm, l_inf, m, delta))]
#[allow(clippy::too_many_arguments)]
fn sparse_width(n: usize, d: usize, s: usize, smoothness: f64, b_norm: f64, l_inf: f64, m: f64, delta: f64) -> PyResult<f64> {
    confsets::sparse_width(n, d, s, smoothness, b_norm, l_inf, m, delta).py()
}

fn config(json: &str) -> PyResult<ScenarioConfig> {
    ScenarioConfig::from_json(json).py()
}

/// Coverage experiment for a JSON scenario; returns CSV text.
#[pyfunction]
fn simulate(config_json: &str) -> PyResult<String> {
    harness::csv_string(&harness::coverage_experiment(&config(config_json)?).py()?).py()
}

#[pyfunction]
fn width(config_json: &str) -> PyResult<String> {
    harness::csv_string(&harness::width_experiment(&config(config_json)?).py()?).py()
}

/// Returns `(csv, violations)`.
#[pyfunction]
fn regret(config_json: &str) -> PyResult<(String, usize)> {
    let audit = harness::regret_audit(&config(config_json)?).py()?;
    Ok((harness::csv_string(&audit.rows).py()?, audit.violations))
}

/// Returns `(csv, passes)`.
#[pyfunction]
#[pyo3(signature = (config_json, eta=None))]
fn validate_martingale(config_json: &str, eta: Option<f64>) -> PyResult<(String, bool)> {
    let cfg = config(config_json)?;
    let report = match eta.or(cfg.eta) {
        Some(e) => harness::shifted_martingale_validate(&cfg, e),
        None => harness::martingale_validate(&cfg),
    }
    .py()?;
    Ok((harness::csv_string(&report.rows).py()?, report.passes()))
}

#[pymodule]
fn glmcs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyLog>()?;
    m.add_class::<PyForecaster>()?;
    m.add_class::<PySet>()?;
    m.add_function(wrap_pyfunction!(negloglik, m)?)?;
    m.add_function(wrap_pyfunction!(d_psi, m)?)?;
    m.add_function(wrap_pyfunction!(truncate, m)?)?;
    m.add_function(wrap_pyfunction!(ridge_mle, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_mle, m)?)?;
    m.add_function(wrap_pyfunction!(info_gain, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_set, m)?)?;
    m.add_function(wrap_pyfunction!(transductive_set, m)?)?;
    m.add_function(wrap_pyfunction!(det_algorithmic_set, m)?)?;
    m.add_function(wrap_pyfunction!(ewa_algorithmic_set, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_width, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(width, m)?)?;
    m.add_function(wrap_pyfunction!(regret, m)?)?;
    m.add_function(wrap_pyfunction!(validate_martingale, m)?)?;
    Ok(())
}
