//! Python bindings for the trust inference and propagation library.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use std::path::PathBuf;
use tip_core::dataio;
use tip_core::equilibrium;
use tip_core::inference;
use tip_core::simulator;
use tip_core::special;
use tip_core::trust;

fn to_py_err(err: tip_core::Error) -> PyErr {
    match err {
        tip_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Cumulative positive/negative experience parameterizing Beta trust.
#[pyclass(frozen)]
#[derive(Clone)]
struct ExperiencePair {
    inner: trust::ExperiencePair,
}

#[pymethods]
impl ExperiencePair {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: trust::ExperiencePair::new(alpha, beta).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn expected_trust(&self) -> f64 {
        self.inner.expected_trust()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    /// Experience after one direct interaction with success measure p.
    fn direct_update(&self, params: &TrustParams, p: f64) -> PyResult<Self> {
        let obs = trust::PerformanceObservation::new(p).map_err(to_py_err)?;
        Ok(Self {
            inner: self.inner.direct_update(&params.inner, &obs),
        })
    }

    /// Experience after hearing a teammate report `peer_trust`, compared
    /// against `own_prev_trust` and discounted by `trust_in_peer`.
    fn indirect_update(
        &self,
        params: &TrustParams,
        own_prev_trust: f64,
        peer_trust: f64,
        trust_in_peer: f64,
    ) -> PyResult<Self> {
        let rating =
            |v: f64| trust::TrustRating::new(v).map_err(to_py_err);
        Ok(Self {
            inner: self.inner.indirect_update(
                &params.inner,
                rating(own_prev_trust)?,
                rating(peer_trust)?,
                rating(trust_in_peer)?,
            ),
        })
    }

    /// One seeded trust report drawn from Beta(alpha, beta).
    fn sample(&self, seed: u64) -> f64 {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        self.inner.sample(&mut rng).value()
    }

    fn __repr__(&self) -> String {
        format!(
            "ExperiencePair(alpha={}, beta={})",
            self.inner.alpha(),
            self.inner.beta()
        )
    }
}

/// The six trust parameters of one (human, robot) pair.
#[pyclass(frozen)]
#[derive(Clone)]
struct TrustParams {
    inner: trust::TrustParams,
}

#[pymethods]
impl TrustParams {
    #[new]
    #[pyo3(signature = (alpha0=1.0, beta0=1.0, s=1.0, f=1.0, s_hat=1.0, f_hat=1.0))]
    fn new(alpha0: f64, beta0: f64, s: f64, f: f64, s_hat: f64, f_hat: f64) -> PyResult<Self> {
        Ok(Self {
            inner: trust::TrustParams::new(alpha0, beta0, s, f, s_hat, f_hat)
                .map_err(to_py_err)?,
        })
    }

    #[getter]
    fn alpha0(&self) -> f64 {
        self.inner.alpha0
    }

    #[getter]
    fn beta0(&self) -> f64 {
        self.inner.beta0
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn f(&self) -> f64 {
        self.inner.f
    }

    #[getter]
    fn s_hat(&self) -> f64 {
        self.inner.s_hat
    }

    #[getter]
    fn f_hat(&self) -> f64 {
        self.inner.f_hat
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "TrustParams(alpha0={}, beta0={}, s={}, f={}, s_hat={}, f_hat={})",
            p.alpha0, p.beta0, p.s, p.f, p.s_hat, p.f_hat
        )
    }
}

#[pyfunction]
fn expected_trust(alpha: f64, beta: f64) -> PyResult<f64> {
    Ok(trust::ExperiencePair::new(alpha, beta)
        .map_err(to_py_err)?
        .expected_trust())
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    special::ln_gamma(x).map_err(to_py_err)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    special::digamma(x).map_err(to_py_err)
}

#[pyfunction]
fn log_beta_pdf(t: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    special::log_beta_pdf(t, alpha, beta).map_err(to_py_err)
}

/// Seeded Beta draws; deterministic for a fixed seed.
#[pyfunction]
#[pyo3(signature = (alpha, beta, seed, n=1))]
fn sample_beta(alpha: f64, beta: f64, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| special::sample_beta(alpha, beta, &mut rng))
        .collect()
}

fn schedule(
    m: u32,
    n: u32,
    reliability: f64,
    trust_xy: f64,
    trust_yx: f64,
) -> PyResult<equilibrium::ScheduleSpec> {
    equilibrium::ScheduleSpec::new(m, n, reliability, trust_xy, trust_yx).map_err(to_py_err)
}

/// Long-run trust equilibrium of the alternating schedule.
#[pyfunction]
#[pyo3(signature = (params_x, params_y, m, n, reliability, trust_xy=0.8, trust_yx=0.8, method="newton"))]
#[allow(clippy::too_many_arguments)]
fn solve_equilibrium<'py>(
    py: Python<'py>,
    params_x: &TrustParams,
    params_y: &TrustParams,
    m: u32,
    n: u32,
    reliability: f64,
    trust_xy: f64,
    trust_yx: f64,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let method = match method {
        "newton" => equilibrium::SolveMethod::Newton,
        "grid" => equilibrium::SolveMethod::Grid,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}', expected 'newton' or 'grid'"
            )))
        }
    };
    let sched = schedule(m, n, reliability, trust_xy, trust_yx)?;
    let eq = equilibrium::solve(&params_x.inner, &params_y.inner, &sched, method)
        .map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("t_x", eq.t_x)?;
    out.set_item("t_y", eq.t_y)?;
    out.set_item("case", eq.case_used.to_string())?;
    out.set_item("residual", eq.residual)?;
    out.set_item("fell_back_to_grid", eq.fell_back_to_grid)?;
    Ok(out)
}

/// Monte-Carlo convergence summary for the alternating schedule.
#[pyfunction]
#[pyo3(signature = (params_x, params_y, m, n, reliability, turns, replicas, seed, trust_xy=0.8, trust_yx=0.8, expected_value=false))]
#[allow(clippy::too_many_arguments)]
fn simulate_summary<'py>(
    py: Python<'py>,
    params_x: &TrustParams,
    params_y: &TrustParams,
    m: u32,
    n: u32,
    reliability: f64,
    turns: u32,
    replicas: u32,
    seed: u64,
    trust_xy: f64,
    trust_yx: f64,
    expected_value: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = simulator::SimConfig {
        sched: schedule(m, n, reliability, trust_xy, trust_yx)?,
        params_x: params_x.inner,
        params_y: params_y.inner,
        turns,
        replicas,
        seed,
        communication: if expected_value {
            simulator::CommunicationMode::ExpectedValue
        } else {
            simulator::CommunicationMode::ReportedSample
        },
    };
    let summary = simulator::monte_carlo_limit(&cfg).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("mean_final_x", summary.mean_final_x)?;
    out.set_item("mean_final_y", summary.mean_final_y)?;
    out.set_item("sd_final_x", summary.sd_final_x)?;
    out.set_item("sd_final_y", summary.sd_final_y)?;
    out.set_item("drift_x", summary.drift_x)?;
    out.set_item("drift_y", summary.drift_y)?;
    Ok(out)
}

/// Write a synthetic session log to `path`.
#[pyfunction]
#[pyo3(signature = (path, sessions=15, tasks=10, rel_a=0.9, rel_b=0.6, seed=0))]
fn generate_synthetic_csv(
    path: PathBuf,
    sessions: u32,
    tasks: u32,
    rel_a: f64,
    rel_b: f64,
    seed: u64,
) -> PyResult<()> {
    let mut cfg = dataio::SynthConfig::protocol_defaults(seed);
    cfg.sessions = sessions;
    cfg.tasks_per_session = tasks;
    cfg.reliability_a = rel_a;
    cfg.reliability_b = rel_b;
    let ds = dataio::generate_synthetic(&cfg).map_err(to_py_err)?;
    dataio::write_dataset_file(&ds, &path).map_err(to_py_err)
}

/// Fit one (agent, robot) pair from a session-log CSV.
#[pyfunction]
#[pyo3(signature = (path, agent, robot, model="tip", tasks=10))]
fn fit_csv<'py>(
    py: Python<'py>,
    path: PathBuf,
    agent: &str,
    robot: &str,
    model: &str,
    tasks: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let ds = dataio::parse_dataset_file(&path, tasks).map_err(to_py_err)?;
    let human: dataio::Human = agent.parse().map_err(to_py_err)?;
    let robot: dataio::Robot = robot.parse().map_err(to_py_err)?;
    let variant = match model {
        "tip" => inference::ModelVariant::Tip,
        "direct" => inference::ModelVariant::DirectOnly,
        "indirect" => inference::ModelVariant::IndirectOnly,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown model '{other}', expected 'tip', 'direct', or 'indirect'"
            )))
        }
    };
    let history = ds.agent_history(human, robot).map_err(to_py_err)?;
    let opts = inference::FitOptions::default();
    let report = if history.is_complete() {
        inference::fit(&history, variant, &opts).map_err(to_py_err)?
    } else {
        inference::estimate_missing(&history, variant, &opts)
            .map_err(to_py_err)?
            .fit
    };
    let theta = PyDict::new(py);
    theta.set_item("alpha0", report.theta_star.alpha0)?;
    theta.set_item("beta0", report.theta_star.beta0)?;
    theta.set_item("s", report.theta_star.s)?;
    theta.set_item("f", report.theta_star.f)?;
    theta.set_item("s_hat", report.theta_star.s_hat)?;
    theta.set_item("f_hat", report.theta_star.f_hat)?;
    let out = PyDict::new(py);
    out.set_item("theta_star", theta)?;
    out.set_item("final_loglik", report.final_loglik)?;
    out.set_item("iterations", report.iterations)?;
    out.set_item("converged", report.converged)?;
    out.set_item("model_variant", report.variant.to_string())?;
    out.set_item("expected_trust", report.expected_trust)?;
    Ok(out)
}

#[pymodule]
fn tip_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ExperiencePair>()?;
    m.add_class::<TrustParams>()?;
    m.add_function(wrap_pyfunction!(expected_trust, m)?)?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(log_beta_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(sample_beta, m)?)?;
    m.add_function(wrap_pyfunction!(solve_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_summary, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_csv, m)?)?;
    m.add_function(wrap_pyfunction!(fit_csv, m)?)?;
    Ok(())
}
