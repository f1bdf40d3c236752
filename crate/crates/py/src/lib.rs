//! Python bindings. The module is importable as `ringqed`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ringqed::cavity::{build_cavity_matrix, CavityParams, CouplingMode};
use ringqed::config::{template, Experiment, RunConfig};
use ringqed::dynamics::build_coupling;
use ringqed::experiments::cloud::{calibrate_cloud, default_cloud, run_cloud_ensemble, CloudRun};
use ringqed::experiments::spectrum::{compute_spectrum, default_detunings, SpectrumOptions, SpectrumRun, SpectrumSource};
use ringqed::experiments::{metric_row, Excitation, ModelOptions, Realization};
use ringqed::free_space::build_free_matrix;
use ringqed::geometry::{build_array, sample_cloud, ArrayParams, ArrayShape};
use ringqed::oracle::{compare_models, Tolerances};
use ringqed::units::Calibration;
use ringqed::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidCalibration(_) | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn excitation(name: &str) -> PyResult<Excitation> {
    match name {
        "tds" => Ok(Excitation::Tds),
        "ss" => Ok(Excitation::Ss),
        _ => Err(PyValueError::new_err(format!("excitation must be 'tds' or 'ss', got '{name}'"))),
    }
}

fn coupling(uniform: bool) -> CouplingMode {
    if uniform {
        CouplingMode::Uniform
    } else {
        CouplingMode::HeightDependent
    }
}

fn matrix(m: &ringqed::CMatrix) -> Vec<Vec<ringqed::C64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Atom positions in units of λ0.
#[pyclass(name = "AtomConfig", module = "ringqed")]
#[derive(Clone)]
pub struct PyAtomConfig {
    inner: ringqed::geometry::AtomConfig,
}

#[pymethods]
impl PyAtomConfig {
    #[new]
    fn new(positions: Vec<[f64; 3]>) -> PyResult<Self> {
        Ok(Self {
            inner: ringqed::geometry::AtomConfig::new("custom", positions).map_err(err)?,
        })
    }

    /// Gaussian cloud with the default geometry; lengths in nm.
    #[staticmethod]
    #[pyo3(signature = (n_atoms, seed, sigma_z_nm=None, z_mean_nm=None))]
    fn cloud(n_atoms: usize, seed: u64, sigma_z_nm: Option<f64>, z_mean_nm: Option<f64>) -> PyResult<Self> {
        let cal = Calibration::default();
        let mut p = default_cloud(n_atoms, &cal);
        if let Some(s) = sigma_z_nm {
            p.sigma_z = cal.nm_to_internal(s);
        }
        if let Some(z) = z_mean_nm {
            p.z_mean = cal.nm_to_internal(z);
        }
        Ok(Self {
            inner: sample_cloud(&p, seed).map_err(err)?,
        })
    }

    /// Line or ring array; `spacing` in λ0, heights in nm.
    #[staticmethod]
    #[pyo3(signature = (n_sites, spacing=0.3, shape="line", z_height_nm=330.0, delta_z_nm=0.0, filling=1.0, seed=0))]
    fn array(
        n_sites: usize,
        spacing: f64,
        shape: &str,
        z_height_nm: f64,
        delta_z_nm: f64,
        filling: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cal = Calibration::default();
        let shape = match shape {
            "line" => ArrayShape::Line,
            "ring" => ArrayShape::Ring,
            _ => return Err(PyValueError::new_err("shape must be 'line' or 'ring'")),
        };
        let p = ArrayParams {
            n_sites,
            spacing,
            z_height: cal.nm_to_internal(z_height_nm),
            filling_fraction: filling,
            delta_z: cal.nm_to_internal(delta_z_nm),
            shape,
            target_atoms: None,
        };
        Ok(Self {
            inner: build_array(&p, seed).map_err(err)?,
        })
    }

    #[getter]
    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.positions.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("AtomConfig({} atoms, {})", self.inner.len(), self.inner.geometry_tag)
    }
}

/// Cavity parameters; rates in Γ0, lengths in λ0.
#[pyclass(name = "CavityParams", module = "ringqed")]
#[derive(Clone)]
pub struct PyCavityParams {
    inner: CavityParams,
}

#[pymethods]
impl PyCavityParams {
    #[new]
    #[pyo3(signature = (kappa_i=100.0, kappa_e=100.0, delta_c=0.0, n_eff=1.69, c_ref=0.05, z_ref=None, z_ev=None, eta=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kappa_i: f64,
        kappa_e: f64,
        delta_c: f64,
        n_eff: f64,
        c_ref: f64,
        z_ref: Option<f64>,
        z_ev: Option<f64>,
        eta: f64,
    ) -> PyResult<Self> {
        let d = CavityParams::default();
        let p = CavityParams {
            kappa_i,
            kappa_e,
            delta_c,
            n_eff,
            c_ref,
            z_ref: z_ref.unwrap_or(d.z_ref),
            z_ev: z_ev.unwrap_or_else(|| ringqed::cavity::evanescent_length(n_eff)),
            eta,
        };
        p.validate().map_err(err)?;
        Ok(Self { inner: p })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn c_ref(&self) -> f64 {
        self.inner.c_ref
    }

    #[getter]
    fn z_ev(&self) -> f64 {
        self.inner.z_ev
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Cavity, free-space and total coupling matrices as nested lists.
#[pyfunction]
#[pyo3(signature = (config, params, uniform_c=false))]
fn coupling_matrices<'py>(
    py: Python<'py>,
    config: &PyAtomConfig,
    params: &PyCavityParams,
    uniform_c: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cav = build_cavity_matrix(&config.inner, &params.inner, coupling(uniform_c)).map_err(err)?;
    let free = build_free_matrix(&config.inner).map_err(err)?;
    let m = build_coupling(params.inner.delta_c, &cav, &free).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("cavity", matrix(&cav.matrix))?;
    d.set_item("free_space", matrix(&free.0))?;
    d.set_item("total", matrix(&m.matrix))?;
    d.set_item("cooperativities", cav.cooperativities.clone())?;
    Ok(d)
}

/// Decay metrics of one configuration.
#[pyfunction]
#[pyo3(signature = (config, params, excitation="tds", uniform_c=false, free_space=true))]
fn decay_metrics<'py>(
    py: Python<'py>,
    config: &PyAtomConfig,
    params: &PyCavityParams,
    excitation: &str,
    uniform_c: bool,
    free_space: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let options = ModelOptions {
        coupling: coupling(uniform_c),
        free_space,
        k_override: None,
    };
    let r = Realization::new(&config.inner, &params.inner, &options).map_err(err)?;
    let m = r.metrics(self::excitation(excitation)?, params.inner.eta).map_err(err)?;
    let d = PyDict::new(py);
    for (name, v) in metric_row(&m) {
        d.set_item(name, v)?;
    }
    let rates: Vec<f64> = r.eigen.decay_rates().to_vec();
    d.set_item("mode_decay_rates", rates)?;
    Ok(d)
}

/// Monte Carlo ensemble over default clouds: mean and standard error of
/// every metric.
#[pyfunction]
#[pyo3(signature = (n_atoms, c1=0.05, trials=1000, seed=1, excitation="tds", uniform_c=false, free_space=true, k=None))]
#[allow(clippy::too_many_arguments)]
fn cloud_ensemble<'py>(
    py: Python<'py>,
    n_atoms: usize,
    c1: f64,
    trials: u64,
    seed: u64,
    excitation: &str,
    uniform_c: bool,
    free_space: bool,
    k: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut run = CloudRun::new(default_cloud(n_atoms, &Calibration::default()), c1, self::excitation(excitation)?, trials, seed);
    run.coupling = coupling(uniform_c);
    run.free_space = free_space;
    let stats = py.allow_threads(|| run_cloud_ensemble(&run, k)).map_err(err)?;
    let d = PyDict::new(py);
    for (name, m) in &stats.metrics {
        d.set_item(name, (m.stats.mean, m.stats.std_err()))?;
    }
    d.set_item("accepted", stats.accepted())?;
    d.set_item("excluded", stats.excluded_total())?;
    Ok(d)
}

/// Trial-averaged bus transmission of default clouds and its Lorentzian
/// linewidth.
#[pyfunction]
#[pyo3(signature = (n_atoms, c1=0.05, trials=200, seed=1, points=241, free_space=true, stochastic=true, uniform_c=false))]
#[allow(clippy::too_many_arguments)]
fn spectrum<'py>(
    py: Python<'py>,
    n_atoms: usize,
    c1: f64,
    trials: u64,
    seed: u64,
    points: usize,
    free_space: bool,
    stochastic: bool,
    uniform_c: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let run = SpectrumRun {
        source: SpectrumSource::Cloud(default_cloud(n_atoms, &Calibration::default())),
        cavity: CavityParams::default(),
        c1,
        options: SpectrumOptions {
            uniform_c,
            poisson_n: false,
            free_space,
            stochastic,
        },
        detunings: default_detunings(n_atoms, c1, points),
        trials,
        seed,
    };
    let r = py.allow_threads(|| compute_spectrum(&run)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("detunings", r.detunings.clone())?;
    d.set_item("transmission", r.transmission.clone())?;
    d.set_item("extinction", r.extinction.clone())?;
    d.set_item("fwhm", r.fwhm())?;
    d.set_item("converged", r.fit_converged())?;
    Ok(d)
}

/// Compares eigenmode dynamics with master-equation propagation on a
/// small configuration (at most six atoms).
#[pyfunction]
#[pyo3(signature = (config, params, t_end=2.0, uniform_c=false))]
fn oracle_check<'py>(
    py: Python<'py>,
    config: &PyAtomConfig,
    params: &PyCavityParams,
    t_end: f64,
    uniform_c: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let report = compare_models(&config.inner, &params.inner, coupling(uniform_c), t_end, Tolerances::default())
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("eigen_vs_eliminated", report.eigen_vs_eliminated.max())?;
    d.set_item("eliminated_vs_full", report.eliminated_vs_full.max())?;
    d.set_item("eliminated_vs_full_fast", report.eliminated_vs_full_fast.max())?;
    d.set_item("cavity_field", report.cavity_field)?;
    d.set_item("passed", report.passed())?;
    Ok(d)
}

/// Commented configuration template.
#[pyfunction]
#[pyo3(name = "template", signature = (experiment="cloud-decay"))]
fn config_template(experiment: &str) -> PyResult<String> {
    let e = Experiment::from_name(experiment)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment '{experiment}'")))?;
    Ok(template(e))
}

/// Runs a TOML configuration as the command-line tool would, writing the
/// artifacts; returns the one-line summary.
#[pyfunction]
fn run_config(py: Python<'_>, toml_text: &str) -> PyResult<String> {
    let cfg = RunConfig::from_toml(toml_text).map_err(err)?;
    let out = py
        .allow_threads(|| ringqed::cli::run(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(out.summary)
}

/// Cloud calibration: the reference cooperativity giving ensemble-mean `c1`.
#[pyfunction]
#[pyo3(signature = (n_atoms, c1=0.05))]
fn calibrated_cloud_cavity(n_atoms: usize, c1: f64) -> PyCavityParams {
    let cloud = default_cloud(n_atoms, &Calibration::default());
    PyCavityParams {
        inner: calibrate_cloud(&CavityParams::default(), &cloud, c1, CouplingMode::HeightDependent),
    }
}

#[pymodule]
#[pyo3(name = "ringqed")]
fn ringqed_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAtomConfig>()?;
    m.add_class::<PyCavityParams>()?;
    m.add_function(wrap_pyfunction!(coupling_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(decay_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(cloud_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(config_template, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(calibrated_cloud_cavity, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
