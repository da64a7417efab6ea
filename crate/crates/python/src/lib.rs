//! Python bindings.
//!
//! Reports (fit results, feasibility, covariance spectra) cross the boundary
//! as JSON and come back as plain dicts.

use std::path::PathBuf;

use evsampler_core::analysis;
use evsampler_core::generators::{self, EvsModel, PrepMode, Program};
use evsampler_core::metrics;
use evsampler_core::quantum::SpectralSummary;
use evsampler_core::reuploading::{FitConfig, GradientMode};
use evsampler_core::samplers::{self, ShotConfig};
use evsampler_core::target_maps::{self, default_resolution, families};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: evsampler_core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_prep(name: &str) -> PyResult<PrepMode> {
    match name {
        "exact_injection" => Ok(PrepMode::ExactInjection),
        "rotation_cascade" => Ok(PrepMode::RotationCascade),
        other => Err(PyValueError::new_err(format!(
            "unknown prep mode {other:?} (allowed: exact_injection, rotation_cascade)"
        ))),
    }
}

fn parse_gradient(name: &str) -> PyResult<GradientMode> {
    match name {
        "central_difference" => Ok(GradientMode::CentralDifference),
        "parameter_shift" => Ok(GradientMode::ParameterShift),
        other => Err(PyValueError::new_err(format!(
            "unknown gradient mode {other:?} (allowed: central_difference, parameter_shift)"
        ))),
    }
}

/// Piecewise-constant density on `[-1, 1]^dims`.
#[pyclass(name = "GridDensity", module = "evsampler", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGridDensity {
    inner: target_maps::GridDensity,
}

#[pymethods]
impl PyGridDensity {
    /// Tabulate a named family: uniform, bimodal, correlated_gaussian or
    /// dirichlet (tabulated in stick-breaking coordinates for the simplex encoder).
    #[staticmethod]
    #[pyo3(signature = (family, dims=1, resolution=None, rho=None, alpha=None))]
    fn family(
        py: Python<'_>,
        family: &str,
        dims: usize,
        resolution: Option<usize>,
        rho: Option<f64>,
        alpha: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let res = |d: usize| resolution.unwrap_or_else(|| default_resolution(d));
        let family = family.to_string();
        let inner = py
            .detach(move || match family.as_str() {
                "uniform" => target_maps::build_grid_density(families::uniform, dims, res(dims)),
                "bimodal" => target_maps::build_grid_density(families::bimodal, 1, res(1)),
                "correlated_gaussian" => {
                    let rho = rho.ok_or_else(|| {
                        evsampler_core::Error::validation("correlated_gaussian needs rho")
                    })?;
                    target_maps::build_grid_density(families::correlated_gaussian(rho), 2, res(2))
                }
                "dirichlet" => {
                    let alpha = alpha.ok_or_else(|| {
                        evsampler_core::Error::validation("dirichlet needs alpha")
                    })?;
                    let m = alpha.len();
                    if m < 2 {
                        return Err(evsampler_core::Error::validation(
                            "dirichlet needs at least two alpha entries",
                        ));
                    }
                    generators::simplex_grid_density(families::dirichlet(alpha), m, res(m - 1))
                }
                other => Err(evsampler_core::Error::validation(format!(
                    "unknown family {other:?} (allowed: uniform, bimodal, correlated_gaussian, dirichlet)"
                ))),
            })
            .map_err(to_py_err)?;
        Ok(PyGridDensity { inner })
    }

    /// Cell values in row-major order, coordinate 0 slowest; normalized on load.
    #[staticmethod]
    fn from_values(dims: usize, resolution: usize, values: Vec<f64>) -> PyResult<Self> {
        let inner =
            target_maps::GridDensity::from_values(dims, resolution, values).map_err(to_py_err)?;
        Ok(PyGridDensity { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let inner = target_maps::GridDensity::read(&path).map_err(to_py_err)?;
        Ok(PyGridDensity { inner })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(to_py_err)
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// `(mean, covariance)` of the piecewise-constant density.
    fn moments(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        self.inner.moments()
    }

    /// Draws pushed through the triangular map of this density.
    fn sample_via_map(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<PySampleSet> {
        let density = self.inner.clone();
        let inner = py
            .detach(move || {
                let map = target_maps::build_triangular_map(&density);
                target_maps::sample_via_map(&map, n, seed)
            })
            .map_err(to_py_err)?;
        Ok(PySampleSet { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "GridDensity(dims={}, resolution={})",
            self.inner.dims(),
            self.inner.resolution()
        )
    }
}

/// An expectation value sampler.
#[pyclass(name = "Model", module = "evsampler", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: EvsModel,
}

#[pymethods]
impl PyModel {
    /// Fit a product encoder. Returns `(model, fits)` where `fits` holds one
    /// dict per output coordinate.
    #[staticmethod]
    #[pyo3(signature = (
        density, layers, seed=0, grid_points_per_dim=64, max_iters=2000,
        step_size=0.05, tolerance=1e-12, restarts=4, gradient="central_difference"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn product<'py>(
        py: Python<'py>,
        density: &PyGridDensity,
        layers: usize,
        seed: u64,
        grid_points_per_dim: usize,
        max_iters: usize,
        step_size: f64,
        tolerance: f64,
        restarts: usize,
        gradient: &str,
    ) -> PyResult<(PyModel, Bound<'py, PyAny>)> {
        let cfg = FitConfig {
            grid_points_per_dim,
            max_iters,
            step_size,
            gradient_mode: parse_gradient(gradient)?,
            tolerance,
            seed,
            restarts,
        };
        let density = density.inner.clone();
        let enc = py
            .detach(move || generators::build_product_encoder(&density, layers, &cfg))
            .map_err(to_py_err)?;
        let fits = json_to_py(py, &enc.fits)?;
        Ok((PyModel { inner: enc.model }, fits))
    }

    #[staticmethod]
    #[pyo3(signature = (density, prep="exact_injection"))]
    fn dense(density: &PyGridDensity, prep: &str) -> PyResult<Self> {
        let inner = generators::build_dense_encoder_with_mode(&density.inner, parse_prep(prep)?)
            .map_err(to_py_err)?;
        Ok(PyModel { inner })
    }

    /// Simplex encoder for a density from `GridDensity.family("dirichlet", ...)`.
    #[staticmethod]
    fn simplex(density: &PyGridDensity) -> PyResult<Self> {
        let m = density.inner.dims() + 1;
        let inner = generators::build_simplex_encoder(&density.inner, m).map_err(to_py_err)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = EvsModel::from_json(text).map_err(to_py_err)?;
        Ok(PyModel { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let text = self.to_json()?;
        evsampler_core::io::write_atomic(&path, text.as_bytes()).map_err(to_py_err)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    #[getter]
    fn is_circuit(&self) -> bool {
        matches!(self.inner.program(), Program::Circuit { .. })
    }

    /// Exact expectation values at an input point of `[0, 1]^input_dim`.
    fn expectations(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.expectations(&x).map_err(to_py_err)
    }

    /// `(lambda_min, lambda_max, spectral_norm, capital_lambda)` per observable.
    fn spectral_summaries(&self) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        Ok(self
            .inner
            .spectral_summaries()
            .map_err(to_py_err)?
            .into_iter()
            .map(|s| (s.lambda_min, s.lambda_max, s.spectral_norm, s.capital_lambda))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(id={:?}, n_qubits={}, input_dim={}, output_dim={})",
            self.inner.id(),
            self.inner.n_qubits(),
            self.inner.input_dim(),
            self.inner.output_dim()
        )
    }
}

/// `N` draws of an `M`-dimensional sampler.
#[pyclass(name = "SampleSet", module = "evsampler", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySampleSet {
    inner: samplers::SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = samplers::SampleSet::from_rows(&rows).map_err(to_py_err)?;
        Ok(PySampleSet { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let inner = samplers::SampleSet::read(&path).map_err(to_py_err)?;
        Ok(PySampleSet { inner })
    }

    /// CSV plus a `.meta.json` sidecar.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(to_py_err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    #[getter]
    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.meta)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn column(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.dims() {
            return Err(PyValueError::new_err(format!(
                "column {j} out of range for {} dimensions",
                self.inner.dims()
            )));
        }
        Ok(self.inner.column(j))
    }

    fn mean(&self) -> Vec<f64> {
        self.inner.mean()
    }

    fn correlation(&self, i: usize, j: usize) -> PyResult<f64> {
        let d = self.inner.dims();
        if i >= d || j >= d {
            return Err(PyValueError::new_err("column index out of range"));
        }
        Ok(self.inner.correlation(i, j))
    }

    fn __repr__(&self) -> String {
        format!("SampleSet(n={}, dims={})", self.inner.len(), self.inner.dims())
    }
}

#[pyfunction]
fn sample_exact(py: Python<'_>, model: &PyModel, n: usize, seed: u64) -> PyResult<PySampleSet> {
    let model = model.inner.clone();
    let inner = py
        .detach(move || samplers::sample_exact(&model, n, seed))
        .map_err(to_py_err)?;
    Ok(PySampleSet { inner })
}

/// Each expectation estimated from `shots` measurements.
#[pyfunction]
fn sample_with_shots(
    py: Python<'_>,
    model: &PyModel,
    n: usize,
    shots: u64,
    seed: u64,
) -> PyResult<PySampleSet> {
    let cfg = ShotConfig::new(shots).map_err(to_py_err)?;
    let model = model.inner.clone();
    let inner = py
        .detach(move || samplers::sample_with_shots(&model, n, cfg, seed))
        .map_err(to_py_err)?;
    Ok(PySampleSet { inner })
}

#[pyfunction]
fn gaussian_noise(samples: &PySampleSet, epsilon: f64, seed: u64) -> PyResult<PySampleSet> {
    let inner = samplers::gaussian_noise_model(&samples.inner, epsilon, seed).map_err(to_py_err)?;
    Ok(PySampleSet { inner })
}

#[pyfunction]
#[pyo3(signature = (output_dim, spectral_norm, epsilon, c=1.0))]
fn required_shots(output_dim: usize, spectral_norm: f64, epsilon: f64, c: f64) -> PyResult<u64> {
    samplers::required_shots(output_dim, spectral_norm, epsilon, c).map_err(to_py_err)
}

#[pyfunction]
fn w1_1d(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    metrics::w1_1d(&a, &b).map_err(to_py_err)
}

#[pyfunction]
fn w1_exact(a: &PySampleSet, b: &PySampleSet) -> PyResult<f64> {
    metrics::w1_exact(&a.inner, &b.inner).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (a, b, n_projections=128, seed=0))]
fn w1_sliced(a: &PySampleSet, b: &PySampleSet, n_projections: usize, seed: u64) -> PyResult<f64> {
    metrics::w1_sliced(&a.inner, &b.inner, n_projections, seed).map_err(to_py_err)
}

#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    metrics::ks_two_sample(&a, &b).map_err(to_py_err)
}

/// Necessary-condition report for `n_qubits` and `output_dim` observables
/// sharing the spectrum `[lambda_min, lambda_max]`.
#[pyfunction]
#[pyo3(signature = (n_qubits, output_dim, epsilon, lambda_min=-1.0, lambda_max=1.0, q_grid=None))]
fn check_feasibility<'py>(
    py: Python<'py>,
    n_qubits: usize,
    output_dim: usize,
    epsilon: f64,
    lambda_min: f64,
    lambda_max: f64,
    q_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spectrum = SpectralSummary::from_extremes(lambda_min, lambda_max).map_err(to_py_err)?;
    let q_grid = q_grid.unwrap_or_else(analysis::default_q_grid);
    let report = analysis::check_feasibility(n_qubits, output_dim, epsilon, &[spectrum], &q_grid)
        .map_err(to_py_err)?;
    json_to_py(py, &report)
}

/// Primary-map covariance of a random layered encoding.
#[pyfunction]
#[pyo3(signature = (n_qubits, input_dim, layers, samples=4096, seed=0, threshold=1e-8))]
fn primary_covariance<'py>(
    py: Python<'py>,
    n_qubits: usize,
    input_dim: usize,
    layers: usize,
    samples: usize,
    seed: u64,
    threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(move || {
            let (circuit, weights) =
                analysis::random_layered_encoding(n_qubits, input_dim, layers, seed)?;
            analysis::primary_covariance(&circuit, &weights, input_dim, samples, seed, threshold)
        })
        .map_err(to_py_err)?;
    json_to_py(py, &report)
}

#[pymodule]
fn evsampler(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridDensity>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySampleSet>()?;
    m.add_function(wrap_pyfunction!(sample_exact, m)?)?;
    m.add_function(wrap_pyfunction!(sample_with_shots, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_noise, m)?)?;
    m.add_function(wrap_pyfunction!(required_shots, m)?)?;
    m.add_function(wrap_pyfunction!(w1_1d, m)?)?;
    m.add_function(wrap_pyfunction!(w1_exact, m)?)?;
    m.add_function(wrap_pyfunction!(w1_sliced, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(check_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(primary_covariance, m)?)?;
    Ok(())
}
