//! Python bindings. Vectors are lists of complex numbers and matrices are
//! lists of rows.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nfvom::estimator::{
    build_polar_codebook, estimate_joint, estimate_omp, estimate_vom_only, make_pilots, CodebookConfig, PilotKind,
    PilotMatrix, RidgeConfig, Scheme,
};
use nfvom::harness::{self, run_block, run_blocks, ExperimentConfig, ExperimentContext, ResultsTable};
use nfvom::linalg::{CMatrix, CVector};
use nfvom::{metrics, vom, ArrayGeometry, Point2D};

fn err(e: nfvom::Error) -> PyErr {
    match e {
        nfvom::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

pub fn to_matrix(rows: &[Vec<Complex64>]) -> Result<CMatrix, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(format!("row {bad} has {} entries, expected {m}", rows[bad].len()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn from_matrix(a: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().cloned().collect()).collect()
}

fn to_vector(v: Vec<Complex64>) -> CVector {
    CVector::from_vec(v)
}

fn from_vector(v: &CVector) -> Vec<Complex64> {
    v.iter().cloned().collect()
}

fn matrix_arg(rows: Vec<Vec<Complex64>>, what: &str) -> PyResult<CMatrix> {
    to_matrix(&rows).map_err(|m| PyValueError::new_err(format!("{what}: {m}")))
}

/// Columns of an `N x 0` matrix cannot be given as rows, so an empty list
/// means "no columns" with the row count taken from context.
fn matrix_or_empty(rows: Vec<Vec<Complex64>>, n: usize, what: &str) -> PyResult<CMatrix> {
    if rows.is_empty() {
        Ok(CMatrix::zeros(n, 0))
    } else {
        matrix_arg(rows, what)
    }
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    Scheme::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown scheme {s:?}")))
}

fn ridge(mu_s: Option<f64>, mu_d: Option<f64>) -> PyResult<RidgeConfig> {
    match (mu_s, mu_d) {
        (None, None) => Ok(RidgeConfig::NoiseAware),
        (Some(mu_s), Some(mu_d)) => Ok(RidgeConfig::Fixed { mu_s, mu_d }),
        _ => Err(PyValueError::new_err("give both mu_s and mu_d or neither")),
    }
}

fn pilots(z: Vec<Vec<Complex64>>) -> PyResult<PilotMatrix> {
    let z = matrix_arg(z, "pilots")?;
    let per_symbol_power = if z.ncols() == 0 { 0.0 } else { z.norm_squared() / z.ncols() as f64 };
    Ok(PilotMatrix { z, per_symbol_power })
}

/// Uniform linear array along the x axis, centred at the origin.
#[pyclass(name = "Array", module = "nfvom_py", from_py_object)]
#[derive(Clone)]
pub struct PyArray {
    inner: ArrayGeometry,
}

#[pymethods]
impl PyArray {
    #[new]
    #[pyo3(signature = (num_elements = 64, carrier_freq = 2.4e9, spacing = None, speed_of_light = 3.0e8))]
    fn new(num_elements: usize, carrier_freq: f64, spacing: Option<f64>, speed_of_light: f64) -> PyResult<Self> {
        let inner = nfvom::make_ula(num_elements, carrier_freq, spacing, speed_of_light).map_err(err)?;
        Ok(PyArray { inner })
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength()
    }

    #[getter]
    fn aperture(&self) -> f64 {
        self.inner.aperture()
    }

    /// `(Fresnel, Rayleigh)` distances in meters.
    fn near_field_bounds(&self) -> PyResult<(f64, f64)> {
        self.inner.near_field_bounds().map_err(err)
    }

    fn steering_vector(&self, x: f64, y: f64) -> PyResult<Vec<Complex64>> {
        Ok(from_vector(&self.inner.steering_vector(Point2D::new(x, y)).map_err(err)?))
    }

    fn steering_matrix(&self, points: Vec<(f64, f64)>) -> PyResult<Vec<Vec<Complex64>>> {
        let pts: Vec<Point2D> = points.iter().map(|&(x, y)| Point2D::new(x, y)).collect();
        Ok(from_matrix(&self.inner.steering_matrix(&pts).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("Array(num_elements={}, wavelength={})", self.inner.len(), self.inner.wavelength())
    }
}

/// Experiment configuration; defaults reproduce the reference setup.
#[pyclass(name = "Config", module = "nfvom_py", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(t) => ExperimentConfig::from_toml_str(t).map_err(err)?,
            None => ExperimentConfig::default(),
        };
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: ExperimentConfig::load(std::path::Path::new(path)).map_err(err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn array(&self) -> PyResult<PyArray> {
        Ok(PyArray {
            inner: self.inner.array.build().map_err(err)?,
        })
    }

    #[getter]
    fn trials(&self) -> usize {
        self.inner.trials
    }

    #[setter]
    fn set_trials(&mut self, v: usize) {
        self.inner.trials = v;
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    #[setter]
    fn set_master_seed(&mut self, v: u64) {
        self.inner.master_seed = v;
    }

    #[getter]
    fn pilot_lengths(&self) -> Vec<usize> {
        self.inner.pilot_lengths.clone()
    }

    #[setter]
    fn set_pilot_lengths(&mut self, v: Vec<usize>) {
        self.inner.pilot_lengths = v;
    }

    #[getter]
    fn schemes(&self) -> Vec<String> {
        self.inner.schemes.iter().map(|s| s.to_string()).collect()
    }

    #[setter]
    fn set_schemes(&mut self, v: Vec<String>) -> PyResult<()> {
        self.inner.schemes = v.iter().map(|s| parse_scheme(s)).collect::<PyResult<_>>()?;
        Ok(())
    }
}

/// Virtual object map: per-grid-point communication entries and one
/// sensing entry over a shared library of virtual object locations.
#[pyclass(name = "VirtualObjectMap", module = "nfvom_py", from_py_object)]
#[derive(Clone)]
pub struct PyVom {
    inner: vom::Vom,
}

#[pymethods]
impl PyVom {
    #[staticmethod]
    fn build(config: &PyConfig) -> PyResult<Self> {
        let cfg = &config.inner;
        let geom = cfg.array.build().map_err(err)?;
        let scene = cfg.scene.resolve().map_err(err)?;
        let inner = vom::build_vom(&scene, &geom, &cfg.vom, &cfg.coefficients).map_err(err)?;
        Ok(PyVom { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyVom {
            inner: vom::Vom::from_text(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyVom {
            inner: vom::Vom::load(std::path::Path::new(path)).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(std::path::Path::new(path)).map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Static virtual object locations for a UE position.
    fn lookup(&self, x: f64, y: f64) -> PyResult<Vec<(f64, f64)>> {
        let pts = self.inner.lookup(Point2D::new(x, y)).map_err(err)?;
        Ok(pts.iter().map(|p| (p.x, p.y)).collect())
    }

    fn sensing_points(&self) -> Vec<(f64, f64)> {
        self.inner.sensing_points().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn library(&self) -> Vec<(f64, f64)> {
        self.inner.library.locations.iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn num_entries(&self) -> usize {
        self.inner.comm_entries.len()
    }

    #[getter]
    fn j(&self) -> usize {
        self.inner.j
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    fn __eq__(&self, other: &PyVom) -> bool {
        self.inner == other.inner
    }
}

fn rows_to_dicts<'py>(py: Python<'py>, table: &ResultsTable) -> PyResult<Vec<Bound<'py, PyDict>>> {
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scheme", r.scheme.as_str())?;
            d.set_item("t_p", r.t_p)?;
            d.set_item("nmse_mean", r.nmse_mean)?;
            d.set_item("nmse_stderr", r.nmse_stderr)?;
            d.set_item("rate_mean", r.rate_mean)?;
            d.set_item("rate_stderr", r.rate_stderr)?;
            d.set_item("trials", r.trials)?;
            Ok(d)
        })
        .collect()
}

/// Aggregated sweep results, one row per `(scheme, t_p)`.
#[pyclass(name = "Results", module = "nfvom_py", from_py_object)]
#[derive(Clone)]
pub struct PyResults {
    inner: ResultsTable,
}

#[pymethods]
impl PyResults {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyResults {
            inner: ResultsTable::from_csv(text).map_err(err)?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv().map_err(err)
    }

    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        rows_to_dicts(py, &self.inner)
    }

    /// `(nmse_mean, rate_mean)` of one cell.
    fn get(&self, scheme: &str, t_p: usize) -> PyResult<Option<(f64, f64)>> {
        Ok(self.inner.get(parse_scheme(scheme)?, t_p).map(|r| (r.nmse_mean, r.rate_mean)))
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

/// Prepared experiment: array, scene, map, codebook, clutter projector and
/// noise calibration.
#[pyclass(name = "Experiment", module = "nfvom_py")]
pub struct PyExperiment {
    inner: ExperimentContext,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (config = None, vom = None))]
    fn new(config: Option<&PyConfig>, vom: Option<&PyVom>) -> PyResult<Self> {
        let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
        let inner = match vom {
            None => ExperimentContext::new(&cfg).map_err(err)?,
            Some(v) => {
                let geom = cfg.array.build().map_err(err)?;
                let scene = cfg.scene.resolve().map_err(err)?;
                ExperimentContext::with_vom(&cfg, geom, scene, v.inner.clone()).map_err(err)?
            }
        };
        Ok(PyExperiment { inner })
    }

    #[getter]
    fn vom(&self) -> PyVom {
        PyVom {
            inner: self.inner.vom.clone(),
        }
    }

    fn calibration<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner.calibration;
        let d = PyDict::new(py);
        d.set_item("mean_channel_energy", c.mean_channel_energy)?;
        d.set_item("mean_sensing_energy", c.mean_sensing_energy)?;
        d.set_item("pilot_noise", c.pilot_noise)?;
        d.set_item("echo_noise", c.echo_noise)?;
        d.set_item("data_snr", c.data_snr)?;
        d.set_item("draws", c.draws)?;
        Ok(d)
    }

    /// Metrics of every configured scheme on one coherence block.
    fn run_block<'py>(&self, py: Python<'py>, block: u64, t_p: usize) -> PyResult<Bound<'py, PyDict>> {
        let o = run_block(&self.inner, block, t_p).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("block", o.block)?;
        d.set_item("t_p", o.t_p)?;
        d.set_item("ue", (o.ue.x, o.ue.y))?;
        d.set_item("rho", o.rho)?;
        d.set_item("residual_energy", o.residual_energy)?;
        d.set_item("digest", o.digest)?;
        let schemes = PyDict::new(py);
        for m in &o.metrics {
            let s = PyDict::new(py);
            s.set_item("nmse", m.nmse)?;
            s.set_item("rate", m.rate)?;
            s.set_item("beam_gain", m.beam_gain)?;
            schemes.set_item(m.scheme.as_str(), s)?;
        }
        d.set_item("metrics", schemes)?;
        Ok(d)
    }

    /// Sweep over `pilot_lengths` (default: the configured ones).
    #[pyo3(signature = (pilot_lengths = None, trials = None, first_block = 0))]
    fn sweep(
        &self,
        py: Python<'_>,
        pilot_lengths: Option<Vec<usize>>,
        trials: Option<usize>,
        first_block: u64,
    ) -> PyResult<PyResults> {
        let t_ps = pilot_lengths.unwrap_or_else(|| self.inner.cfg.pilot_lengths.clone());
        let trials = trials.unwrap_or(self.inner.cfg.trials);
        let ctx = &self.inner;
        let out = py
            .detach(|| run_blocks(ctx, &t_ps, first_block, trials))
            .map_err(err)?;
        Ok(PyResults { inner: out.table })
    }

    /// Full configured sweep written as results, metadata and per-trial CSV.
    fn emit(&self, py: Python<'_>, directory: &str) -> PyResult<Vec<String>> {
        let ctx = &self.inner;
        let out = py.detach(|| harness::run_sweep(ctx)).map_err(err)?;
        let files = harness::emit_results(ctx, &out, std::path::Path::new(directory)).map_err(err)?;
        Ok(files.iter().map(|p| p.display().to_string()).collect())
    }
}

/// `N x T_p` pilot matrix whose columns have squared norm `power`.
#[pyfunction]
#[pyo3(signature = (n, t_p, power = 1.0, seed = 0, orthogonal = false))]
fn pilot_matrix(n: usize, t_p: usize, power: f64, seed: u64, orthogonal: bool) -> PyResult<Vec<Vec<Complex64>>> {
    let kind = if orthogonal { PilotKind::Orthogonal } else { PilotKind::Gaussian };
    Ok(from_matrix(&make_pilots(n, t_p, power, kind, seed).map_err(err)?.z))
}

fn estimate_dict<'py>(py: Python<'py>, e: &nfvom::estimator::ChannelEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("h_hat", from_vector(&e.h_hat))?;
    d.set_item("alpha", from_vector(&e.alpha))?;
    d.set_item("xi", from_vector(&e.xi))?;
    d.set_item("support", e.support.clone())?;
    d.set_item("mu", e.mu)?;
    d.set_item("first_order_residual", e.foc_residual)?;
    Ok(d)
}

/// Joint ridge estimate over static steering columns and a dynamic basis.
/// Penalties default to the noise-aware rule; pass both to fix them.
#[pyfunction]
#[pyo3(signature = (y, z, a_sta, u_dyn = Vec::new(), sigma2 = 0.0, mu_s = None, mu_d = None))]
#[allow(clippy::too_many_arguments)]
fn joint_estimate<'py>(
    py: Python<'py>,
    y: Vec<Complex64>,
    z: Vec<Vec<Complex64>>,
    a_sta: Vec<Vec<Complex64>>,
    u_dyn: Vec<Vec<Complex64>>,
    sigma2: f64,
    mu_s: Option<f64>,
    mu_d: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let z = pilots(z)?;
    let n = z.z.nrows();
    let a = matrix_or_empty(a_sta, n, "a_sta")?;
    let u = matrix_or_empty(u_dyn, n, "u_dyn")?;
    let e = estimate_joint(&to_vector(y), &z, &a, &u, &ridge(mu_s, mu_d)?, sigma2).map_err(err)?;
    estimate_dict(py, &e)
}

fn codebook(array: &PyArray, g_angles: usize, g_rings: usize) -> PyResult<nfvom::estimator::PolarCodebook> {
    let cfg = CodebookConfig {
        g_angles,
        g_rings,
        ..CodebookConfig::default()
    };
    build_polar_codebook(&array.inner, &cfg).map_err(err)
}

/// Map-only benchmark with `n_dyn_atoms` polar codebook atoms.
#[pyfunction]
#[pyo3(signature = (y, z, a_sta, array, n_dyn_atoms = 3, sigma2 = 0.0, g_angles = 128, g_rings = 8))]
#[allow(clippy::too_many_arguments)]
fn vom_only_estimate<'py>(
    py: Python<'py>,
    y: Vec<Complex64>,
    z: Vec<Vec<Complex64>>,
    a_sta: Vec<Vec<Complex64>>,
    array: &PyArray,
    n_dyn_atoms: usize,
    sigma2: f64,
    g_angles: usize,
    g_rings: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let z = pilots(z)?;
    let a = matrix_or_empty(a_sta, z.z.nrows(), "a_sta")?;
    let cb = codebook(array, g_angles, g_rings)?;
    let e = estimate_vom_only(&to_vector(y), &z, &a, &cb, n_dyn_atoms, &RidgeConfig::NoiseAware, sigma2).map_err(err)?;
    estimate_dict(py, &e)
}

/// Orthogonal matching pursuit over the polar codebook of `array`.
#[pyfunction]
#[pyo3(signature = (y, z, array, sparsity = 10, g_angles = 128, g_rings = 8))]
fn omp_estimate<'py>(
    py: Python<'py>,
    y: Vec<Complex64>,
    z: Vec<Vec<Complex64>>,
    array: &PyArray,
    sparsity: usize,
    g_angles: usize,
    g_rings: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let z = pilots(z)?;
    let cb = codebook(array, g_angles, g_rings)?;
    let e = estimate_omp(&to_vector(y), &z, &cb, sparsity).map_err(err)?;
    estimate_dict(py, &e)
}

#[pyfunction]
fn nmse(h_true: Vec<Complex64>, h_hat: Vec<Complex64>) -> PyResult<f64> {
    metrics::nmse(&to_vector(h_true), &to_vector(h_hat)).map_err(err)
}

#[pyfunction]
fn mrt(h_hat: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(from_vector(&metrics::mrt(&to_vector(h_hat)).map_err(err)?))
}

#[pyfunction]
fn achievable_rate(h_true: Vec<Complex64>, w: Vec<Complex64>, power: f64, sigma2: f64, t_p: usize, t: usize) -> PyResult<f64> {
    metrics::achievable_rate(&to_vector(h_true), &to_vector(w), power, sigma2, t_p, t).map_err(err)
}

#[pymodule]
fn nfvom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArray>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyVom>()?;
    m.add_class::<PyResults>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(pilot_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(joint_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(vom_only_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(omp_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(nmse, m)?)?;
    m.add_function(wrap_pyfunction!(mrt, m)?)?;
    m.add_function(wrap_pyfunction!(achievable_rate, m)?)?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
