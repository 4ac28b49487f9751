//! Python bindings for `bellpbr`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bellpbr::bellfn::{catalog, primary_functional, standardized_set};
use bellpbr::optim::OptimizerControls;
use bellpbr::protocols::{self, DEFAULT_BLOCK_SIZE, DEFAULT_FULL_PBR_FLOOR};
use bellpbr::{gainrates, optim, quantum, scenario, sim};

fn to_py(err: bellpbr::Error) -> PyErr {
    match err {
        bellpbr::Error::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn controls(tol: Option<f64>, max_iter: Option<usize>, floor: f64) -> OptimizerControls {
    let base = OptimizerControls::default();
    OptimizerControls {
        tolerance: tol.unwrap_or(base.tolerance),
        max_iterations: max_iter.unwrap_or(base.max_iterations),
        floor,
    }
}

type Trial = (Vec<usize>, Vec<usize>);

fn trials_from(trials: Vec<Trial>) -> Vec<bellpbr::TrialResult> {
    trials
        .into_iter()
        .map(|(s, o)| bellpbr::TrialResult::new(s, o))
        .collect()
}

#[pyclass(name = "Scenario", module = "bellpbr_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    fn new(parties: usize, settings: usize, outcomes: usize) -> PyResult<Self> {
        let inner = scenario::Scenario::new(parties, settings, outcomes).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn parties(&self) -> usize {
        self.inner.parties()
    }

    #[getter]
    fn settings(&self) -> usize {
        self.inner.settings()
    }

    #[getter]
    fn outcomes(&self) -> usize {
        self.inner.outcomes()
    }

    fn result_space_size(&self) -> PyResult<usize> {
        self.inner.result_space_size().map_err(to_py)
    }

    /// Index of a result; settings are 1-based, outcomes 0-based.
    fn encode(&self, settings: Vec<usize>, outcomes: Vec<usize>) -> PyResult<usize> {
        self.inner
            .encode_result(&bellpbr::TrialResult::new(settings, outcomes))
            .map_err(to_py)
    }

    fn decode(&self, index: usize) -> PyResult<Trial> {
        let x = self.inner.decode_result(index).map_err(to_py)?;
        Ok((x.settings, x.outcomes))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario({}, {}, {})",
            self.inner.parties(),
            self.inner.settings(),
            self.inner.outcomes()
        )
    }
}

#[pyclass(name = "Distribution", module = "bellpbr_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: scenario::Distribution,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(scenario: &PyScenario, probs: Vec<f64>) -> PyResult<Self> {
        let inner = scenario::Distribution::new(scenario.inner.clone(), probs).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Empirical frequencies of `(settings, outcomes)` pairs.
    #[staticmethod]
    fn empirical(scenario: &PyScenario, trials: Vec<Trial>) -> PyResult<Self> {
        let inner =
            scenario::Distribution::empirical(&scenario.inner, &trials_from(trials)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Born-rule distribution of `chsh:<θ>` or `cglmp:<d>`.
    #[staticmethod]
    fn quantum(config: &str) -> PyResult<Self> {
        let inner = quantum::named_config(config)
            .and_then(|c| c.distribution())
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = scenario::distribution_from_json(text).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        scenario::distribution_to_json(&self.inner).map_err(to_py)
    }

    #[getter]
    fn scenario(&self) -> PyScenario {
        PyScenario {
            inner: self.inner.scenario().clone(),
        }
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    /// Expectation of a named catalog functional.
    fn expectation(&self, functional: &str) -> PyResult<f64> {
        let f = primary_functional(functional, self.inner.scenario()).map_err(to_py)?;
        Ok(self.inner.expectation(&f.table().map_err(to_py)?))
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Trial>> {
        let trials = sim::sample_trials(&self.inner, n, seed).map_err(to_py)?;
        Ok(trials.into_iter().map(|x| (x.settings, x.outcomes)).collect())
    }
}

/// `(name, B, b, a)` for every functional a catalog name expands to.
#[pyfunction]
fn functionals(name: &str, scenario: &PyScenario) -> PyResult<Vec<(String, f64, f64, f64)>> {
    let fs = catalog(name, &scenario.inner).map_err(to_py)?;
    Ok(fs
        .into_iter()
        .map(|f| (f.name().to_string(), f.bound(), f.inf(), f.sup()))
        .collect())
}

#[pyfunction]
fn pbr_pvalue(log2_t: f64) -> f64 {
    protocols::pbr_pvalue(log2_t)
}

#[pyfunction]
fn martingale_pvalue(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> PyResult<f64> {
    protocols::martingale_pvalue(mean, n, a, b, bound).map_err(to_py)
}

#[pyfunction]
fn azuma_pvalue(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> PyResult<f64> {
    protocols::azuma_pvalue(mean, n, a, b, bound).map_err(to_py)
}

#[pyfunction]
fn gain_martingale(i_q: f64, a: f64, b: f64, bound: f64) -> PyResult<f64> {
    gainrates::gain_martingale(i_q, a, b, bound).map_err(to_py)
}

/// `(rate, weights)`; the trivial function is always first in the weights.
#[pyfunction]
#[pyo3(signature = (q, functions, tol=None, max_iter=None))]
fn gain_spbr(
    q: &PyDistribution,
    functions: &str,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> PyResult<(f64, Vec<f64>)> {
    let set = standardized_set(functions, q.inner.scenario()).map_err(to_py)?;
    let (rate, w) = gainrates::gain_spbr(&q.inner, &set, &controls(tol, max_iter, 0.0)).map_err(to_py)?;
    Ok((rate, w.into_inner()))
}

#[pyfunction]
#[pyo3(signature = (q, tol=None, max_iter=None))]
fn optimal_gain(q: &PyDistribution, tol: Option<f64>, max_iter: Option<usize>) -> PyResult<f64> {
    gainrates::optimal_gain(&q.inner, &controls(tol, max_iter, 0.0)).map_err(to_py)
}

/// `(divergence, projected distribution, mixture weights)`.
#[pyfunction]
#[pyo3(signature = (q, tol=None, max_iter=None))]
fn kl_project_lr(
    q: &PyDistribution,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> PyResult<(f64, PyDistribution, Vec<f64>)> {
    let p = optim::kl_project_lr(&q.inner, &controls(tol, max_iter, 0.0)).map_err(to_py)?;
    Ok((
        p.divergence,
        PyDistribution { inner: p.projected },
        p.mixture.weights().to_vec(),
    ))
}

/// Runs one protocol (`mart`, `spbr` or `fpbr`) over recorded trials and
/// returns a summary dict with the running report under `rows`.
#[pyfunction]
#[pyo3(signature = (trials, scenario, protocol, functions=None, block=DEFAULT_BLOCK_SIZE, tol=None, max_iter=None, floor=None))]
#[allow(clippy::too_many_arguments)]
fn analyze<'py>(
    py: Python<'py>,
    trials: Vec<Trial>,
    scenario: &PyScenario,
    protocol: &str,
    functions: Option<&str>,
    block: usize,
    tol: Option<f64>,
    max_iter: Option<usize>,
    floor: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sc = &scenario.inner;
    let trials = trials_from(trials);
    if trials.is_empty() {
        return Err(to_py(bellpbr::Error::EmptyTrials));
    }
    let names = functions.unwrap_or(if sc.outcomes() == 2 { "chsh" } else { "cglmp" });
    let protocol: sim::Protocol = protocol.parse().map_err(to_py)?;
    let out = PyDict::new(py);
    let (rows, warned) = match protocol {
        sim::Protocol::Mart => {
            let f = primary_functional(names, sc).map_err(to_py)?;
            (protocols::run_martingale(&trials, &f).map_err(to_py)?.history, false)
        }
        sim::Protocol::Spbr => {
            let set = standardized_set(names, sc).map_err(to_py)?;
            let c = controls(tol, max_iter, floor.unwrap_or(0.0));
            let s = protocols::run_simplified_pbr(&trials, set, block, &c).map_err(to_py)?;
            (s.history, s.optimizer_warning)
        }
        sim::Protocol::Fpbr => {
            let c = controls(tol, max_iter, floor.unwrap_or(DEFAULT_FULL_PBR_FLOOR));
            let s = protocols::run_full_pbr(&trials, sc, block, &c).map_err(to_py)?;
            (s.history, s.optimizer_warning)
        }
    };
    let last = rows.last().copied();
    out.set_item("protocol", protocol.name())?;
    out.set_item("n", last.map_or(0, |r| r.n))?;
    out.set_item("statistic", last.map_or(0.0, |r| r.statistic))?;
    out.set_item("p_value", last.map_or(1.0, |r| r.p_value))?;
    out.set_item("log2_p", last.map_or(0.0, |r| r.log2_p))?;
    out.set_item("optimizer_warning", warned)?;
    let table: Vec<(u64, f64, f64)> = rows.iter().map(|r| (r.n, r.statistic, r.p_value)).collect();
    out.set_item("rows", table)?;
    Ok(out)
}

/// Streaming simplified-PBR analysis: push one trial at a time.
#[pyclass(name = "SimplifiedPbr", module = "bellpbr_py")]
struct PySimplifiedPbr {
    inner: protocols::SimplifiedPbr,
}

#[pymethods]
impl PySimplifiedPbr {
    #[new]
    #[pyo3(signature = (scenario, functions, block=DEFAULT_BLOCK_SIZE, tol=None, max_iter=None))]
    fn new(
        scenario: &PyScenario,
        functions: &str,
        block: usize,
        tol: Option<f64>,
        max_iter: Option<usize>,
    ) -> PyResult<Self> {
        let set = standardized_set(functions, &scenario.inner).map_err(to_py)?;
        let inner = protocols::SimplifiedPbr::new(set, block, controls(tol, max_iter, 0.0)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Adds a trial; returns `(n, log2_T, p_value)`.
    fn push(&mut self, settings: Vec<usize>, outcomes: Vec<usize>) -> PyResult<(u64, f64, f64)> {
        let row = self
            .inner
            .push(&bellpbr::TrialResult::new(settings, outcomes))
            .map_err(to_py)?;
        Ok((row.n, row.statistic, row.p_value))
    }

    #[getter]
    fn log2_t(&self) -> f64 {
        self.inner.log2_t()
    }

    #[getter]
    fn p_value(&self) -> f64 {
        self.inner.p_value()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().as_slice().to_vec()
    }
}

/// Simulated experiment on a named quantum configuration; returns
/// `{protocol: {"neg_log2_p": ..., "rate": ..., "offset": ...}}`.
#[pyfunction]
#[pyo3(signature = (config, trials=10_000, seed=1, block=DEFAULT_BLOCK_SIZE, functions=None))]
fn simulate<'py>(
    py: Python<'py>,
    config: &str,
    trials: usize,
    seed: u64,
    block: usize,
    functions: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let q = quantum::named_config(config)
        .and_then(|c| c.distribution())
        .map_err(to_py)?;
    let names = functions
        .map(str::to_string)
        .unwrap_or_else(|| if q.scenario().outcomes() == 2 { "chsh".into() } else { "cglmp".into() });
    let mut plan = sim::SimulationPlan::new(config, q, names);
    plan.trials = trials;
    plan.seed = seed;
    plan.block_size = block;
    let report = sim::run_experiment(&plan).map_err(to_py)?;
    let out = PyDict::new(py);
    for run in &report.runs {
        let entry = PyDict::new(py);
        entry.set_item("neg_log2_p", run.final_neg_log2_p())?;
        entry.set_item("rate", run.rate)?;
        entry.set_item("offset", run.learning_offset())?;
        out.set_item(run.protocol.name(), entry)?;
    }
    Ok(out)
}

#[pymodule]
fn bellpbr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PySimplifiedPbr>()?;
    m.add_function(wrap_pyfunction!(functionals, m)?)?;
    m.add_function(wrap_pyfunction!(pbr_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(azuma_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(gain_martingale, m)?)?;
    m.add_function(wrap_pyfunction!(gain_spbr, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_gain, m)?)?;
    m.add_function(wrap_pyfunction!(kl_project_lr, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
