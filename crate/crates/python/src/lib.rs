//! Python bindings for the proportionate-LMS toolkit.
//!
//! Exposes the gain rules, the adaptive filter, the Monte-Carlo harness and
//! the convergence-theory engine as a `ptlms_py` extension module. Build
//! with `cargo build -p ptlms-python --release` and import the produced
//! `libptlms_py.so` (renamed to `ptlms_py.so`), or see
//! `python/smoke_test.py` for a self-contained loader.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ptlms::adaptive::{run_identification, RegressorModel, SystemSpec};
use ptlms::error::Error;
use ptlms::gain;
use ptlms::harness;
use ptlms::theory::{GainMomentsMode, TheoryModel};

fn to_py_err(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A validated gain rule (algorithm variant plus parameters).
#[pyclass(name = "GainRule", frozen)]
#[derive(Clone)]
struct PyGainRule {
    inner: gain::GainRule,
}

#[pymethods]
impl PyGainRule {
    /// Standard LMS: every tap gain is 1.
    #[staticmethod]
    fn lms() -> Self {
        PyGainRule {
            inner: gain::GainRule::standard_lms(),
        }
    }

    /// Proportionate LMS with floor fraction `rho` and startup floor `delta`.
    #[staticmethod]
    #[pyo3(signature = (rho=0.01, delta=0.01))]
    fn plms(rho: f64, delta: f64) -> PyResult<Self> {
        Ok(PyGainRule {
            inner: gain::GainRule::plms(rho, delta).map_err(to_py_err)?,
        })
    }

    /// Improved proportionate LMS with mix `alpha` and regularizer `delta_i`.
    #[staticmethod]
    #[pyo3(signature = (alpha=0.0, delta_i=0.01))]
    fn iplms(alpha: f64, delta_i: f64) -> PyResult<Self> {
        Ok(PyGainRule {
            inner: gain::GainRule::iplms(alpha, delta_i).map_err(to_py_err)?,
        })
    }

    /// mu-law proportionate LMS with compression constant `epsilon`.
    #[staticmethod]
    #[pyo3(signature = (epsilon=1000.0, rho=0.01, delta=0.01))]
    fn mu_law(epsilon: f64, rho: f64, delta: f64) -> PyResult<Self> {
        Ok(PyGainRule {
            inner: gain::GainRule::mu_law(epsilon, rho, delta).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant().name()
    }

    fn __repr__(&self) -> String {
        let p = self.inner.params();
        format!(
            "GainRule({}, rho={}, delta={}, alpha={}, delta_i={}, epsilon={})",
            self.inner.variant().name(),
            p.rho,
            p.delta,
            p.alpha,
            p.delta_i,
            p.epsilon
        )
    }
}

/// Activation F[|w|] of an activation-based rule.
#[pyfunction]
fn activation(w_abs: f64, rule: &PyGainRule) -> PyResult<f64> {
    gain::activation(w_abs, &rule.inner).map_err(to_py_err)
}

/// Per-tap gain vector g(n) for the given weights.
#[pyfunction]
fn gain_vector(w: Vec<f64>, rule: &PyGainRule) -> PyResult<Vec<f64>> {
    Ok(gain::gain_vector(&w, &rule.inner)
        .map_err(to_py_err)?
        .into_vec())
}

/// Adaptive filter state advanced one sample at a time.
#[pyclass(name = "FilterState")]
struct PyFilterState {
    inner: ptlms::FilterState,
}

#[pymethods]
impl PyFilterState {
    #[new]
    fn new(l: usize, mu: f64, rule: &PyGainRule) -> PyResult<Self> {
        Ok(PyFilterState {
            inner: ptlms::FilterState::new(l, mu, rule.inner).map_err(to_py_err)?,
        })
    }

    /// A priori error e = d - u^T w for the current weights.
    fn error(&self, u: Vec<f64>, d: f64) -> PyResult<f64> {
        self.inner.filter_error(&u, d).map_err(to_py_err)
    }

    /// Apply one update step and return the a priori error it used.
    fn step(&mut self, u: Vec<f64>, d: f64) -> PyResult<f64> {
        let e = self.inner.filter_error(&u, d).map_err(to_py_err)?;
        self.inner.step_mut(&u, d).map_err(to_py_err)?;
        Ok(e)
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn iteration(&self) -> usize {
        self.inner.iteration()
    }
}

fn parse_regressor(name: &str) -> PyResult<RegressorModel> {
    RegressorModel::parse(name).map_err(to_py_err)
}

/// Draw a sparse system: `n_active` Gaussian taps at random positions.
#[pyfunction]
fn generate_sparse_system(l: usize, n_active: usize, seed: u64) -> PyResult<Vec<f64>> {
    harness::generate_sparse_system(l, n_active, seed).map_err(to_py_err)
}

/// One seeded identification run; returns the per-iteration squared
/// deviation from `w_opt`.
#[pyfunction]
#[pyo3(name = "run_identification")]
#[pyo3(signature = (w_opt, rule, mu, n_iters, seed, sigma_u2=1.0, sigma_v2=0.01, regressor="tapped_delay_line"))]
#[allow(clippy::too_many_arguments)]
fn run_identification_py(
    w_opt: Vec<f64>,
    rule: &PyGainRule,
    mu: f64,
    n_iters: usize,
    seed: u64,
    sigma_u2: f64,
    sigma_v2: f64,
    regressor: &str,
) -> PyResult<Vec<f64>> {
    let spec = SystemSpec::new(w_opt, sigma_u2, sigma_v2).map_err(to_py_err)?;
    run_identification(
        &spec,
        &rule.inner,
        mu,
        n_iters,
        seed,
        parse_regressor(regressor)?,
    )
    .map_err(to_py_err)
}

/// Ensemble-averaged normalized learning curve in dB. Returns
/// `(msd_db, n_runs_averaged, diverged_runs)`.
#[pyfunction]
#[pyo3(name = "run_ensemble")]
#[pyo3(signature = (w_opt, rule, mu, n_iters, n_runs, seed, sigma_u2=1.0, sigma_v2=0.01, regressor="independent"))]
#[allow(clippy::too_many_arguments)]
fn run_ensemble_py(
    w_opt: Vec<f64>,
    rule: &PyGainRule,
    mu: f64,
    n_iters: usize,
    n_runs: usize,
    seed: u64,
    sigma_u2: f64,
    sigma_v2: f64,
    regressor: &str,
) -> PyResult<(Vec<f64>, usize, usize)> {
    let config = harness::ExperimentConfig {
        l: w_opt.len(),
        n_active: w_opt.iter().filter(|x| **x != 0.0).count().max(1),
        mu,
        rule: rule.inner,
        sigma_u2,
        sigma_v2,
        n_iters,
        n_runs,
        seed,
        regressor: parse_regressor(regressor)?,
    };
    let curve = harness::run_ensemble(&config, &w_opt).map_err(to_py_err)?;
    Ok((curve.msd_db, curve.n_runs_averaged, curve.diverged_runs))
}

/// Steady-state MSD estimate (dB) from the tail of a learning curve.
#[pyfunction]
#[pyo3(signature = (msd_db, tail_fraction=0.1))]
fn empirical_steady_state_msd(msd_db: Vec<f64>, tail_fraction: f64) -> PyResult<f64> {
    let curve = harness::LearningCurve {
        msd_db,
        n_runs_averaged: 1,
        diverged_runs: 0,
    };
    harness::empirical_steady_state_msd(&curve, tail_fraction).map_err(to_py_err)
}

/// Second-moment convergence model for one (system, rule, step size) triple,
/// with gain moments evaluated at `w_opt`.
#[pyclass(name = "TheoryModel", frozen)]
struct PyTheoryModel {
    inner: TheoryModel,
}

#[pymethods]
impl PyTheoryModel {
    #[new]
    #[pyo3(signature = (w_opt, rule, mu, sigma_u2=1.0, sigma_v2=0.01))]
    fn new(w_opt: Vec<f64>, rule: &PyGainRule, mu: f64, sigma_u2: f64, sigma_v2: f64) -> PyResult<Self> {
        Ok(PyTheoryModel {
            inner: TheoryModel::build(
                &w_opt,
                &rule.inner,
                mu,
                sigma_u2,
                sigma_v2,
                GainMomentsMode::Plugin,
            )
            .map_err(to_py_err)?,
        })
    }

    /// Diagonal of the mean gain matrix.
    fn g_bar(&self) -> Vec<f64> {
        self.inner.g_bar().iter().cloned().collect()
    }

    /// `(mu_max, mu_max_sharp)` mean-convergence step-size limits.
    fn mean_stability_bound(&self) -> PyResult<(f64, f64)> {
        let b = self.inner.mean_stability_bound().map_err(to_py_err)?;
        Ok((b.mu_max, b.mu_max_sharp))
    }

    /// `(mu_max, cd_bound, h_bound)` mean-square stability limits.
    fn ms_stability_range(&self) -> PyResult<(f64, f64, f64)> {
        let r = self.inner.ms_stability_range().map_err(to_py_err)?;
        Ok((r.mu_max, r.cd_bound, r.h_bound))
    }

    fn spectral_radius_f(&self) -> PyResult<f64> {
        self.inner.spectral_radius_f().map_err(to_py_err)
    }

    fn steady_state_msd(&self) -> PyResult<f64> {
        self.inner.steady_state_msd().map_err(to_py_err)
    }

    /// Steady-state MSD normalized by ||w_opt||^2, in dB.
    fn steady_state_msd_db(&self) -> PyResult<f64> {
        self.inner.steady_state_msd_db().map_err(to_py_err)
    }

    /// Predicted E||w~(n)||^2 for n = 0..=n_iters given the initial error.
    fn transient_curve(&self, w0_error: Vec<f64>, n_iters: usize) -> PyResult<Vec<f64>> {
        self.inner
            .transient_curve(&w0_error, n_iters)
            .map_err(to_py_err)
    }
}

#[pymodule]
fn ptlms_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGainRule>()?;
    m.add_class::<PyFilterState>()?;
    m.add_class::<PyTheoryModel>()?;
    m.add_function(wrap_pyfunction!(activation, m)?)?;
    m.add_function(wrap_pyfunction!(gain_vector, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sparse_system, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_steady_state_msd, m)?)?;
    m.add_function(wrap_pyfunction!(run_identification_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble_py, m)?)?;
    Ok(())
}
