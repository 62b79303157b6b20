//! Python bindings: environments, closed forms, the optimal-path solver,
//! the simulator, and the online learner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use osa_filetime::analytic::{
    dynamic_ratio_bounds, static_expected_time, static_optimal, static_ratio_bound, threshold_h,
};
use osa_filetime::online::run_online;
use osa_filetime::sim::estimate_expected_time;
use osa_filetime::ssp::{evaluate_path, solve_dynamic_optimal, PolicyPath};
use osa_filetime::{load_scenario, plan, Channel, ChannelId, OsaError, PolicyKind, RngStream};

fn py_err(e: OsaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ids(path: &PolicyPath) -> Vec<u32> {
    path.choices().iter().map(|c| c.0).collect()
}

fn kind(name: &str) -> PyResult<PolicyKind> {
    name.parse().map_err(py_err)
}

/// Slotted channel set. Channels are `(rate_bps, avail_prob)` pairs and get
/// ids `1..=N` in order.
#[pyclass(name = "Environment", frozen)]
struct PyEnvironment {
    inner: osa_filetime::Environment,
}

#[pymethods]
impl PyEnvironment {
    #[new]
    fn new(channels: Vec<(f64, f64)>, slot_seconds: f64) -> PyResult<Self> {
        let channels = channels
            .into_iter()
            .enumerate()
            .map(|(i, (r, p))| Channel::new(i as u32 + 1, r, p))
            .collect();
        let inner = osa_filetime::Environment::new(channels, slot_seconds).map_err(py_err)?;
        Ok(PyEnvironment { inner })
    }

    /// One of `gradual`, `steep`, `lossy`.
    #[staticmethod]
    fn scenario(name: &str) -> PyResult<Self> {
        Ok(PyEnvironment {
            inner: load_scenario(name).map_err(py_err)?,
        })
    }

    #[getter]
    fn slot_seconds(&self) -> f64 {
        self.inner.slot()
    }

    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.inner.channels().iter().map(|c| c.rate).collect()
    }

    #[getter]
    fn avail_probs(&self) -> Vec<f64> {
        self.inner.avail_probs()
    }

    #[getter]
    fn max_tp_channel(&self) -> u32 {
        self.inner.max_tp_channel().0
    }

    fn bits_per_slot(&self, channel: u32) -> PyResult<u64> {
        self.check(channel)?;
        Ok(self.inner.bits_per_slot(ChannelId(channel)))
    }

    fn static_expected_time(&self, channel: u32, file_bits: u64) -> PyResult<f64> {
        self.check(channel)?;
        static_expected_time(&self.inner, ChannelId(channel), file_bits).map_err(py_err)
    }

    /// `(channel, expected_time)` of the best single channel.
    fn static_optimal(&self, file_bits: u64) -> PyResult<(u32, f64)> {
        let (id, t) = static_optimal(&self.inner, file_bits).map_err(py_err)?;
        Ok((id.0, t))
    }

    fn threshold_h(&self) -> PyResult<f64> {
        threshold_h(&self.inner).map_err(py_err)
    }

    /// `(static_upper, dynamic_lower, dynamic_upper)` ratio bounds.
    fn ratio_bounds(&self, file_bits: u64) -> PyResult<(f64, f64, f64)> {
        let s = static_ratio_bound(&self.inner, file_bits).map_err(py_err)?;
        let (lo, up) = dynamic_ratio_bounds(&self.inner, file_bits).map_err(py_err)?;
        Ok((s, lo, up))
    }

    /// Optimal switching policy as a dict with `value_s`, `path`,
    /// `milestones_bits`, `states_explored`.
    fn solve<'py>(&self, py: Python<'py>, file_bits: u64) -> PyResult<Bound<'py, PyDict>> {
        let sol = solve_dynamic_optimal(&self.inner, file_bits).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("value_s", sol.value)?;
        d.set_item("path", ids(&sol.path))?;
        d.set_item("milestones_bits", sol.path.milestones().to_vec())?;
        d.set_item("states_explored", sol.table.states_explored())?;
        Ok(d)
    }

    /// `(path, expected_time)` for `max-tp`, `static-opt`, `dynamic-opt` or
    /// `heuristic`.
    fn plan(&self, policy: &str, file_bits: u64) -> PyResult<(Vec<u32>, f64)> {
        let (path, t) = plan(&self.inner, kind(policy)?, file_bits).map_err(py_err)?;
        Ok((ids(&path), t))
    }

    /// Expected time of an explicit channel sequence.
    fn evaluate_path(&self, file_bits: u64, choices: Vec<u32>) -> PyResult<f64> {
        let choices = choices.into_iter().map(ChannelId).collect();
        let path = PolicyPath::from_choices(&self.inner, file_bits, choices).map_err(py_err)?;
        evaluate_path(&self.inner, &path).map_err(py_err)
    }

    /// Monte Carlo `(mean, std_error)` of a policy's transfer time.
    #[pyo3(signature = (policy, file_bits, episodes, seed=0))]
    fn simulate(
        &self,
        py: Python<'_>,
        policy: &str,
        file_bits: u64,
        episodes: u64,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let (path, _) = plan(&self.inner, kind(policy)?, file_bits).map_err(py_err)?;
        let est = py
            .detach(|| {
                estimate_expected_time(
                    &self.inner,
                    &path,
                    file_bits,
                    episodes,
                    RngStream::new(seed, 0),
                )
            })
            .map_err(py_err)?;
        Ok((est.mean, est.std_error))
    }

    fn __repr__(&self) -> String {
        format!(
            "Environment(slot_seconds={}, rates={:?}, avail_probs={:?})",
            self.inner.slot(),
            self.rates(),
            self.inner.avail_probs()
        )
    }
}

impl PyEnvironment {
    fn check(&self, channel: u32) -> PyResult<()> {
        if self.inner.contains(ChannelId(channel)) {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("no channel {channel}")))
        }
    }
}

#[pyfunction]
fn kl_bernoulli(p: f64, q: f64) -> f64 {
    osa_filetime::online::kl_bernoulli(p, q)
}

#[pyfunction]
fn kl_index(empirical_mean: f64, senses: u64, budget: f64) -> f64 {
    osa_filetime::online::kl_index(empirical_mean, senses, budget)
}

/// Runs the online learner over `files` and returns per-episode columns.
#[pyfunction]
#[pyo3(signature = (env, files, policy, seed=0))]
fn learn<'py>(
    py: Python<'py>,
    env: &PyEnvironment,
    files: Vec<u64>,
    policy: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = kind(policy)?;
    let ledger = py
        .detach(|| run_online(&env.inner, &files, kind, RngStream::new(seed, 0)))
        .map_err(py_err)?;
    let col = |f: fn(&osa_filetime::online::LedgerRow) -> f64| {
        ledger.rows.iter().map(f).collect::<Vec<_>>()
    };
    let d = PyDict::new(py);
    d.set_item("realized_time_s", col(|r| r.realized_time))?;
    d.set_item("regret_cum_s", col(|r| r.regret_cum))?;
    d.set_item("avg_time_ratio", col(|r| r.avg_time_ratio))?;
    d.set_item("avg_throughput_bps", col(|r| r.avg_throughput))?;
    d.set_item("senses", ledger.final_state.senses.clone())?;
    Ok(d)
}

#[pymodule]
fn pyosa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvironment>()?;
    m.add_function(wrap_pyfunction!(kl_bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(kl_index, m)?)?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
