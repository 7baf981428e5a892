//! Python bindings: graphs, Pauli strings, state vectors, FALQON runs,
//! the two finite-budget estimators and the budget experiments.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use falqon::estimators::{self, ShadowEnsemble};
use falqon::experiments::{self, BudgetSearchConfig, MeasurementMode, ResultRow, ScalingRunConfig};
use falqon::falqon::{EstimatorMode, FalqonConfig, FalqonTrace};
use falqon::{Error, Graph, PauliString, StateVector};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn ensemble(name: &str) -> PyResult<ShadowEnsemble> {
    match name {
        "biased" => Ok(ShadowEnsemble::biased()),
        "uniform" => Ok(ShadowEnsemble::uniform()),
        _ => Err(PyValueError::new_err(format!(
            "unknown ensemble {name:?}; use 'biased' or 'uniform'"
        ))),
    }
}

fn parse_labels(labels: Vec<String>) -> PyResult<Vec<PauliString>> {
    labels.iter().map(|l| l.parse::<PauliString>().map_err(to_py)).collect()
}

/// `(n, L, epsilon, run, budget_per_layer)`.
type ScalingPoint = (usize, usize, f64, usize, f64);

#[pyclass(name = "PauliString", module = "falqon_py", frozen)]
struct PyPauliString {
    inner: PauliString,
}

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(label: &str) -> PyResult<Self> {
        Ok(Self {
            inner: label.parse().map_err(to_py)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn weight(&self) -> usize {
        self.inner.weight()
    }

    fn is_diagonal(&self) -> bool {
        self.inner.is_diagonal()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.inner.label())
    }
}

#[pyclass(name = "Graph", module = "falqon_py", frozen)]
struct PyGraph {
    inner: Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: Graph::new(n, edges).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Graph::cycle(n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Graph::complete(n).map_err(to_py)?,
        })
    }

    /// Whitespace-separated edge list, `#` comments, optional `n <count>` header.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Graph::parse_edge_list(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn cut_size(&self, index: usize) -> usize {
        self.inner.cut_size(index)
    }

    /// `(value, bitstring)` of a maximum cut, by exhaustive search.
    fn max_cut(&self) -> PyResult<(usize, String)> {
        let m = self.inner.max_cut_brute_force().map_err(to_py)?;
        Ok((m.value, m.bitstring()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={})",
            self.inner.num_vertices(),
            self.inner.num_edges()
        )
    }
}

#[pyclass(name = "StateVector", module = "falqon_py")]
struct PyStateVector {
    inner: StateVector,
}

#[pymethods]
impl PyStateVector {
    #[staticmethod]
    fn plus(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: StateVector::plus_state(n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_amplitudes(amps: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: StateVector::from_amplitudes(amps).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    /// `exp(-i dt H_p)`.
    fn apply_problem(&mut self, graph: &PyGraph, dt: f64) -> PyResult<()> {
        self.inner.apply_problem_unitary(&graph.inner, dt).map_err(to_py)
    }

    /// `exp(-i beta dt H_d)`.
    fn apply_driver(&mut self, beta: f64, dt: f64) {
        self.inner.apply_driver_unitary(beta, dt);
    }

    fn expectation(&self, label: &str) -> PyResult<f64> {
        let p: PauliString = label.parse().map_err(to_py)?;
        self.inner.expectation(&p).map_err(to_py)
    }
}

#[pyclass(name = "Trace", module = "falqon_py", frozen)]
struct PyTrace {
    inner: FalqonTrace,
    ratio: f64,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.beta).collect()
    }

    #[getter]
    fn a_est(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.a_est).collect()
    }

    #[getter]
    fn c_est(&self) -> Vec<f64> {
        self.inner.estimated_costs()
    }

    #[getter]
    fn c_exact(&self) -> Vec<f64> {
        self.inner.exact_costs()
    }

    #[getter]
    fn approximation_ratio(&self) -> f64 {
        self.ratio
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Runs FALQON. `mode` is 'exact', 'direct' (uses `budget` shots per layer)
/// or 'shadow' (uses `rounds` x `shots_per_round`).
#[pyfunction]
#[pyo3(signature = (graph, mode="exact", dt=0.05, layers=75, alpha=1.0, budget=16384, rounds=128, shots_per_round=128, ensemble_name="biased", seed=0, halt=None))]
#[allow(clippy::too_many_arguments)]
fn run_falqon(
    py: Python<'_>,
    graph: &PyGraph,
    mode: &str,
    dt: f64,
    layers: usize,
    alpha: f64,
    budget: u64,
    rounds: usize,
    shots_per_round: u64,
    ensemble_name: &str,
    seed: u64,
    halt: Option<f64>,
) -> PyResult<PyTrace> {
    let estimator = match mode {
        "exact" => EstimatorMode::Exact,
        "direct" => EstimatorMode::Direct { shots: budget },
        "shadow" => EstimatorMode::Shadow {
            ensemble: ensemble(ensemble_name)?,
            rounds,
            shots_per_round,
        },
        _ => return Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
    };
    let cfg = FalqonConfig {
        dt,
        layers,
        alpha,
        estimator,
        halt_tolerance: halt,
        seed,
    };
    let g = &graph.inner;
    let inner = py.detach(|| falqon::run_falqon(g, &cfg)).map_err(to_py)?;
    let ratio = inner.approximation_ratio(g).map_err(to_py)?;
    Ok(PyTrace { inner, ratio })
}

/// Classical-shadow estimates of each Pauli label from `rounds` x `shots_per_round` measurements.
#[pyfunction]
#[pyo3(signature = (state, labels, rounds, shots_per_round=128, ensemble_name="biased", seed=0))]
fn shadow_estimate(
    state: &PyStateVector,
    labels: Vec<String>,
    rounds: usize,
    shots_per_round: u64,
    ensemble_name: &str,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let obs = parse_labels(labels)?;
    let ens = ensemble(ensemble_name)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = estimators::collect_shadow(&state.inner, &ens, rounds, shots_per_round, &mut rng).map_err(to_py)?;
    Ok(estimators::shadow_expectations(&data, &ens, &obs)
        .map_err(to_py)?
        .estimates)
}

/// Direct estimates with `budget` shots split equally across measurement settings.
#[pyfunction]
#[pyo3(signature = (state, labels, budget, seed=0))]
fn direct_estimate(state: &PyStateVector, labels: Vec<String>, budget: u64, seed: u64) -> PyResult<Vec<f64>> {
    let obs = parse_labels(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(estimators::direct_estimate(&state.inner, &obs, budget, &mut rng)
        .map_err(to_py)?
        .estimates)
}

/// Smallest per-layer budget on the doubling schedule with mean |dC| <= err.
/// Returns `(budget, [(probe_budget, mean_delta_c), ...])`.
#[pyfunction]
#[pyo3(signature = (graph, mode="shadow", err=0.01, dt=0.05, layers=75, shots_per_round=128, ensemble_name="biased", start_budget=128, max_budget=1<<24, repetitions=3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn budget_search(
    py: Python<'_>,
    graph: &PyGraph,
    mode: &str,
    err: f64,
    dt: f64,
    layers: usize,
    shots_per_round: u64,
    ensemble_name: &str,
    start_budget: u64,
    max_budget: u64,
    repetitions: usize,
    seed: u64,
) -> PyResult<(u64, Vec<(u64, f64)>)> {
    let mode = match mode {
        "direct" => MeasurementMode::Direct,
        "shadow" => MeasurementMode::Shadow {
            ensemble: ensemble(ensemble_name)?,
            shots_per_round,
        },
        _ => return Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
    };
    let mut cfg = BudgetSearchConfig::new(graph.inner.clone(), mode);
    cfg.err = err;
    cfg.template.dt = dt;
    cfg.template.layers = layers;
    cfg.template.seed = seed;
    cfg.start_budget = start_budget;
    cfg.max_budget = max_budget;
    cfg.repetitions = repetitions;
    let r = py.detach(|| experiments::budget_search(&cfg)).map_err(to_py)?;
    Ok((r.budget, r.probes.iter().map(|p| (p.budget, p.mean_delta_c)).collect()))
}

/// Complete-graph shadow budgets; one `(n, L, epsilon, run, budget_per_layer)` per point.
#[pyfunction]
#[pyo3(signature = (sizes=vec![4, 5, 6, 7, 8], epsilons=vec![0.05, 0.1], runs=10, layers=10, dt=0.05, shots_per_round=128, ensemble_name="biased", seed=0))]
#[allow(clippy::too_many_arguments)]
fn scaling_run(
    py: Python<'_>,
    sizes: Vec<usize>,
    epsilons: Vec<f64>,
    runs: usize,
    layers: usize,
    dt: f64,
    shots_per_round: u64,
    ensemble_name: &str,
    seed: u64,
) -> PyResult<Vec<ScalingPoint>> {
    let cfg = ScalingRunConfig {
        sizes,
        epsilons,
        runs,
        layers,
        dt,
        shots_per_round,
        ensemble: ensemble(ensemble_name)?,
        seed,
        ..ScalingRunConfig::default()
    };
    let samples = py.detach(|| experiments::scaling_run(&cfg)).map_err(to_py)?;
    Ok(samples
        .iter()
        .map(|s| (s.n, s.num_observables, s.epsilon, s.run, s.budget_per_layer))
        .collect())
}

/// Fits `N = A * 4 log10(L) / eps^2 + B` per epsilon to `(L, epsilon, budget)` rows.
/// Returns `(epsilon, A, B, residual)` tuples.
#[pyfunction]
fn fit_log(rows: Vec<(usize, f64, f64)>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let rows: Vec<ResultRow> = rows
        .into_iter()
        .enumerate()
        .map(|(i, (l, eps, budget))| ResultRow {
            mode: "shadow".into(),
            graph: String::new(),
            n: 0,
            num_observables: l,
            epsilon_or_err: eps,
            run: i,
            budget_per_layer: budget,
        })
        .collect();
    Ok(experiments::fit_log(&rows)
        .map_err(to_py)?
        .iter()
        .map(|f| (f.epsilon, f.a, f.b, f.residual))
        .collect())
}

/// Ceiling of the largest slope.
#[pyfunction]
fn ceil_bound(slopes: Vec<f64>) -> PyResult<i64> {
    let fits: Vec<_> = slopes
        .into_iter()
        .map(|a| experiments::FitResult {
            epsilon: 0.0,
            a,
            b: 0.0,
            residual: 0.0,
        })
        .collect();
    experiments::ceil_bound(&fits).map_err(to_py)
}

#[pymodule]
fn falqon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(run_falqon, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(direct_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(budget_search, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_run, m)?)?;
    m.add_function(wrap_pyfunction!(fit_log, m)?)?;
    m.add_function(wrap_pyfunction!(ceil_bound, m)?)?;
    Ok(())
}
