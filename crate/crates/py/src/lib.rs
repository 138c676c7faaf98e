//! Python bindings: model specs, datasets, fitting, WAIC and the simulator.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

use jointdisp::io as jio;
use jointdisp::quadrature::Gk15Rule;
use jointdisp::sampler::{flatten_state, param_names};
use jointdisp::spline::SplineBasis;
use jointdisp::{
    compute_waic, enumerate_models_from, simulate::default_truth, Baseline, Linking,
    SimulationConfig, VarianceModel,
};

fn to_py_err(e: jointdisp::Error) -> PyErr {
    match e {
        jointdisp::Error::Io(io) => PyIOError::new_err(io.to_string()),
        jointdisp::Error::Fit(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// One cell of the model lattice with its structural settings.
#[pyclass(name = "ModelSpec", skip_from_py_object)]
#[derive(Clone)]
struct PyModelSpec {
    inner: jointdisp::ModelSpec,
}

#[pymethods]
impl PyModelSpec {
    /// Build from variant names, e.g. ModelSpec("EXCHANGEABLE", "SHARED_SIGMA", "PSPLINE").
    #[new]
    fn new(variance_model: &str, linking: &str, baseline: &str) -> PyResult<Self> {
        let vm = VarianceModel::parse(variance_model)
            .ok_or_else(|| PyValueError::new_err(format!("unknown variance model {variance_model:?}")))?;
        let lk = Linking::parse(linking)
            .ok_or_else(|| PyValueError::new_err(format!("unknown linking {linking:?}")))?;
        let bl = Baseline::parse(baseline)
            .ok_or_else(|| PyValueError::new_err(format!("unknown baseline {baseline:?}")))?;
        Ok(PyModelSpec {
            inner: jointdisp::ModelSpec::new(vm, lk, bl),
        })
    }

    /// The model selected by the applied analysis
    /// (EXCHANGEABLE + SHARED_SIGMA + PSPLINE).
    #[staticmethod]
    fn selected() -> Self {
        PyModelSpec {
            inner: jointdisp::ModelSpec::selected(),
        }
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(PyModelSpec {
            inner: jio::parse_model_spec(&path).map_err(to_py_err)?,
        })
    }

    /// The 33 admissible models of the comparison grid, with this spec's
    /// spline/prior settings.
    fn grid(&self) -> Vec<PyModelSpec> {
        enumerate_models_from(&self.inner)
            .into_iter()
            .map(|inner| PyModelSpec { inner })
            .collect()
    }

    fn validate(&self) -> Vec<String> {
        self.inner.validate()
    }

    fn label(&self) -> String {
        self.inner.label()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        jio::write_model_spec(&self.inner, &path).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("ModelSpec({})", self.inner.label())
    }
}

/// A cohort of subjects with repeated measures and event information.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: jointdisp::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load from the longitudinal and survival CSV files.
    #[staticmethod]
    fn from_csv(longitudinal: PathBuf, survival: PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: jio::parse_dataset(&longitudinal, &survival).map_err(to_py_err)?,
        })
    }

    fn save(&self, longitudinal: PathBuf, survival: PathBuf) -> PyResult<()> {
        jio::write_dataset(&self.inner, &longitudinal, &survival).map_err(to_py_err)
    }

    #[getter]
    fn n_subjects(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn n_observations(&self) -> usize {
        self.inner.total_observations()
    }

    #[getter]
    fn n_events(&self) -> usize {
        self.inner.subjects().iter().filter(|s| s.event()).count()
    }

    fn subject_ids(&self) -> Vec<String> {
        self.inner
            .subjects()
            .iter()
            .map(|s| s.id().to_string())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} subjects, {} observations, {} events)",
            self.inner.len(),
            self.inner.total_observations(),
            self.n_events()
        )
    }
}

/// Run-length settings for one MCMC chain.
#[pyclass(name = "SamplerConfig", skip_from_py_object)]
#[derive(Clone)]
struct PySamplerConfig {
    inner: jointdisp::SamplerConfig,
}

#[pymethods]
impl PySamplerConfig {
    #[new]
    #[pyo3(signature = (iterations=500_000, burn_in=250_000, thin=25, seed=1))]
    fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        PySamplerConfig {
            inner: jointdisp::SamplerConfig {
                iterations,
                burn_in,
                thin,
                seed,
                ..jointdisp::SamplerConfig::default()
            },
        }
    }

    #[getter]
    fn retained(&self) -> usize {
        self.inner.retained()
    }

    fn __repr__(&self) -> String {
        format!(
            "SamplerConfig(iterations={}, burn_in={}, thin={}, seed={})",
            self.inner.iterations, self.inner.burn_in, self.inner.thin, self.inner.seed
        )
    }
}

/// Thinned posterior draws plus the pointwise log-likelihood matrix.
#[pyclass(name = "Chain")]
struct PyChain {
    inner: jointdisp::PosteriorChain,
}

#[pymethods]
impl PyChain {
    #[getter]
    fn n_draws(&self) -> usize {
        self.inner.n_draws()
    }

    #[getter]
    fn n_subjects(&self) -> usize {
        self.inner.n_subjects()
    }

    fn param_names(&self) -> Vec<String> {
        self.inner.param_names()
    }

    /// Draws of one named scalar parameter.
    fn series(&self, name: &str) -> PyResult<Vec<f64>> {
        self.inner.param_series(name).map_err(to_py_err)
    }

    /// (waic, lppd, p_waic) from the stored pointwise log-likelihoods.
    fn waic(&self) -> PyResult<(f64, f64, f64)> {
        let r = compute_waic(&self.inner.pointwise).map_err(to_py_err)?;
        Ok((r.waic, r.lppd, r.p_waic))
    }

    /// Rows (parameter, mean, lo2.5, hi97.5).
    fn summary(&self) -> PyResult<Vec<(String, f64, f64, f64)>> {
        Ok(jio::summarize(&self.inner)
            .map_err(to_py_err)?
            .into_iter()
            .map(|r| (r.parameter, r.mean, r.lo, r.hi))
            .collect())
    }

    /// Rows (g, label, t, mean, lo2.5, hi97.5) over a time grid.
    fn curves(&self, grid: Vec<f64>) -> PyResult<Vec<(String, String, f64, f64, f64, f64)>> {
        Ok(jio::export_curves(&self.inner, &grid)
            .map_err(to_py_err)?
            .into_iter()
            .map(|r| (r.g, r.label, r.t, r.mean, r.lo, r.hi))
            .collect())
    }

    /// Per-block acceptance rates.
    fn acceptance(&self) -> Vec<(String, f64)> {
        self.inner
            .blocks
            .iter()
            .map(|b| (b.name.clone(), b.acceptance_rate()))
            .collect()
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        jio::write_chain(&self.inner, &dir).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyChain {
            inner: jio::read_chain(&dir).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain({}, {} draws, {} subjects)",
            self.inner.spec.label(),
            self.inner.n_draws(),
            self.inner.n_subjects()
        )
    }
}

/// Draw a posterior chain; deterministic given the seed.
#[pyfunction]
fn fit(data: &PyDataset, spec: &PyModelSpec, config: &PySamplerConfig) -> PyResult<PyChain> {
    Ok(PyChain {
        inner: jointdisp::run_chain(&data.inner, &spec.inner, &config.inner).map_err(to_py_err)?,
    })
}

/// Run the prior-only kernels (likelihood forced to zero).
#[pyfunction]
fn sample_prior(
    spec: &PyModelSpec,
    config: &PySamplerConfig,
    n_subjects: usize,
) -> PyResult<PyChain> {
    Ok(PyChain {
        inner: jointdisp::sample_prior(&spec.inner, &config.inner, n_subjects)
            .map_err(to_py_err)?,
    })
}

/// Simulate a cohort from built-in true parameters. Returns the dataset and
/// a dict of the completed true parameter values.
#[pyfunction]
#[pyo3(signature = (spec, n_subjects, seed, censor_time=5.0, exam_schedule=None,
                    log_sigma_mean=None, log_sigma_sd=None))]
fn simulate(
    py: Python<'_>,
    spec: &PyModelSpec,
    n_subjects: usize,
    seed: u64,
    censor_time: f64,
    exam_schedule: Option<Vec<f64>>,
    log_sigma_mean: Option<f64>,
    log_sigma_sd: Option<f64>,
) -> PyResult<(PyDataset, Py<PyDict>)> {
    let exchangeable = spec.inner.variance_model == VarianceModel::Exchangeable;
    let config = SimulationConfig {
        n_subjects,
        exam_schedule: exam_schedule.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]),
        censor_time,
        exchangeable_log_sigma: exchangeable.then(|| {
            (
                log_sigma_mean.unwrap_or_else(|| 2.0_f64.ln()),
                log_sigma_sd.unwrap_or(0.5),
            )
        }),
        seed,
        ..SimulationConfig::default()
    };
    let truth = default_truth(&spec.inner);
    let (dataset, completed) =
        jointdisp::simulate_dataset(&truth, &spec.inner, &config).map_err(to_py_err)?;
    let names = param_names(&spec.inner, dataset.len());
    let values = flatten_state(&completed, &spec.inner);
    let dict = PyDict::new(py);
    for (name, value) in names.iter().zip(values) {
        dict.set_item(name, value)?;
    }
    Ok((PyDataset { inner: dataset }, dict.into()))
}

/// WAIC from an explicit pointwise log-likelihood matrix (rows = draws).
#[pyfunction]
fn waic_from_matrix(rows: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let m = jointdisp::LoglikMatrix::from_rows(&rows).map_err(to_py_err)?;
    let r = compute_waic(&m).map_err(to_py_err)?;
    Ok((r.waic, r.lppd, r.p_waic))
}

/// 15-point Gauss-Kronrod integral of a Python callable over [a, b].
#[pyfunction]
fn gk15_integrate(f: Bound<'_, PyAny>, a: f64, b: f64) -> PyResult<f64> {
    let mut failure: Option<PyErr> = None;
    let value = Gk15Rule::standard().integrate(
        |t| match f.call1((t,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    value.map_err(to_py_err)
}

/// Values of the Q = s + 3 cubic B-spline basis functions at time t.
#[pyfunction]
fn eval_basis(t_min: f64, t_max: f64, s: usize, t: f64) -> PyResult<Vec<f64>> {
    let basis = SplineBasis::new(t_min, t_max, s).map_err(to_py_err)?;
    basis.eval(t).map_err(to_py_err)
}

#[pymodule]
fn jointdisp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySamplerConfig>()?;
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(sample_prior, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(waic_from_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(gk15_integrate, m)?)?;
    m.add_function(wrap_pyfunction!(eval_basis, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
