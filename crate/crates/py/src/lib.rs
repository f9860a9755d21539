//! Python bindings over the core types: seeded rng streams, noise
//! application, the MNIST classifier, the Mackey-Glass generator, and the
//! echo state network.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use noisynets::esn::{EsnModel, RidgeConfig};
use noisynets::experiments::box_stats;
use noisynets::fnn::{DenseNet, TrainConfig};
use noisynets::mackey_glass::{integrate, MgParams, TEST_LEN, TRAIN_LEN};
use noisynets::mnist::LabeledImageSet;
use noisynets::noise::{apply_noise, NoiseSpec};
use noisynets::numerics::{rmse, spectral_radius, Matrix, RngStream, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

fn err(e: noisynets::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Seeded, stream-addressed random source.
#[pyclass(name = "RngStream", skip_from_py_object)]
#[derive(Clone)]
struct PyRngStream(RngStream);

#[pymethods]
impl PyRngStream {
    #[new]
    #[pyo3(signature = (seed, stream = 0))]
    fn new(seed: u64, stream: u64) -> Self {
        PyRngStream(RngStream::new(seed, stream))
    }

    fn substream(&self, child: u64) -> PyRngStream {
        PyRngStream(self.0.substream(child))
    }

    fn standard_normal(&mut self) -> f64 {
        self.0.standard_normal()
    }

    fn uniform(&mut self) -> f64 {
        self.0.uniform()
    }

    fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.uniform_in(lo, hi)
    }
}

/// Additive/multiplicative intensities with correlation flags.
#[pyclass(name = "NoiseSpec", skip_from_py_object)]
#[derive(Clone)]
struct PyNoiseSpec(NoiseSpec);

#[pymethods]
impl PyNoiseSpec {
    #[new]
    #[pyo3(signature = (d_add = 0.0, d_mul = 0.0, corr_add = false, corr_mul = false))]
    fn new(d_add: f64, d_mul: f64, corr_add: bool, corr_mul: bool) -> PyResult<Self> {
        let spec = NoiseSpec {
            d_add,
            d_mul,
            corr_add,
            corr_mul,
        };
        spec.validate().map_err(err)?;
        Ok(PyNoiseSpec(spec))
    }

    #[staticmethod]
    fn none() -> Self {
        PyNoiseSpec(NoiseSpec::none())
    }

    #[staticmethod]
    fn additive(d: f64, correlated: bool) -> Self {
        PyNoiseSpec(NoiseSpec::additive(d, correlated))
    }

    #[staticmethod]
    fn multiplicative(d: f64, correlated: bool) -> Self {
        PyNoiseSpec(NoiseSpec::multiplicative(d, correlated))
    }

    /// One noisy read of x with fresh draws.
    fn apply(&self, x: Vec<f64>, rng: &mut PyRngStream) -> PyResult<Vec<f64>> {
        apply_noise(&x, &self.0, &mut rng.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "NoiseSpec(d_add={}, d_mul={}, corr_add={}, corr_mul={})",
            self.0.d_add, self.0.d_mul, self.0.corr_add, self.0.corr_mul
        )
    }
}

/// Flattened images with labels.
#[pyclass(name = "LabeledImageSet")]
struct PyLabeledImageSet(LabeledImageSet);

#[pymethods]
impl PyLabeledImageSet {
    /// Builds a set from row-per-image pixel lists.
    #[staticmethod]
    fn from_parts(images: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Self> {
        let rows = images.len();
        let cols = images.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows * cols);
        for row in &images {
            if row.len() != cols {
                return Err(PyValueError::new_err("ragged image rows"));
            }
            data.extend_from_slice(row);
        }
        let m = Matrix::from_vec(rows, cols, data).map_err(err)?;
        Ok(PyLabeledImageSet(
            LabeledImageSet::from_parts(m, labels).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn load_idx(images_path: PathBuf, labels_path: PathBuf) -> PyResult<Self> {
        LabeledImageSet::load_idx(&images_path, &labels_path)
            .map(PyLabeledImageSet)
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn image_dim(&self) -> usize {
        self.0.image_dim()
    }

    fn label(&self, i: usize) -> u8 {
        self.0.label(i)
    }
}

/// 784-20-10 sigmoid/softmax classifier with hidden-layer noise.
#[pyclass(name = "DenseNet")]
struct PyDenseNet(DenseNet);

#[pymethods]
impl PyDenseNet {
    #[new]
    fn new(seed: u64) -> Self {
        PyDenseNet(DenseNet::mnist_default(seed))
    }

    /// Trains in place; returns [(train_accuracy, mean_loss)] per epoch.
    #[pyo3(signature = (data, noise, epochs = 30, learning_rate = 0.1, batch_size = 32, seed = 0, shuffle = true))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        data: &PyLabeledImageSet,
        noise: &PyNoiseSpec,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
        seed: u64,
        shuffle: bool,
    ) -> PyResult<Vec<(f64, f64)>> {
        let config = TrainConfig {
            epochs,
            learning_rate,
            batch_size,
            noise: noise.0,
            seed,
            shuffle,
        };
        let history = self.0.train(&data.0, &config).map_err(err)?;
        Ok(history.iter().map(|s| (s.accuracy, s.mean_loss)).collect())
    }

    /// Classification accuracy under the given test noise.
    fn evaluate(&self, data: &PyLabeledImageSet, noise: &PyNoiseSpec, rng: &PyRngStream) -> PyResult<f64> {
        self.0.evaluate(&data.0, &noise.0, &rng.0).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        DenseNet::load(&path).map(PyDenseNet).map_err(err)
    }
}

/// Tanh reservoir with a ridge-trained linear readout.
#[pyclass(name = "EsnModel")]
struct PyEsnModel(EsnModel);

#[pymethods]
impl PyEsnModel {
    #[new]
    #[pyo3(signature = (n, seed, spectral_radius = 1.2, density = 1.0))]
    fn new(n: usize, seed: u64, spectral_radius: f64, density: f64) -> PyResult<Self> {
        EsnModel::init_reservoir(n, seed, spectral_radius, density)
            .map(PyEsnModel)
            .map_err(err)
    }

    fn set_noisy_feedback(&mut self, on: bool) {
        self.0.set_noisy_feedback(on);
    }

    /// Harvests noisy states over the series and fits the readout.
    #[pyo3(signature = (inputs, noise, rng, ridge_lambda = 1e-8, washout = 200))]
    fn train(
        &mut self,
        inputs: Vec<f64>,
        noise: &PyNoiseSpec,
        rng: &mut PyRngStream,
        ridge_lambda: f64,
        washout: usize,
    ) -> PyResult<()> {
        let ridge = RidgeConfig {
            lambda: ridge_lambda,
            washout,
        };
        self.0.train(&inputs, &noise.0, &mut rng.0, &ridge).map_err(err)
    }

    /// One teacher-forced prediction per input.
    fn predict_open_loop(
        &mut self,
        inputs: Vec<f64>,
        noise: &PyNoiseSpec,
        rng: &mut PyRngStream,
    ) -> PyResult<Vec<f64>> {
        self.0
            .predict_open_loop(&inputs, &noise.0, &mut rng.0)
            .map_err(err)
    }

    /// Teacher-forces the warmup, then feeds outputs back for `steps`.
    /// Returns (outputs, diverged_step_count).
    fn predict_closed_loop(
        &mut self,
        warmup: Vec<f64>,
        steps: usize,
        noise: &PyNoiseSpec,
        rng: &mut PyRngStream,
    ) -> PyResult<(Vec<f64>, usize)> {
        let run = self
            .0
            .predict_closed_loop(&warmup, steps, &noise.0, &mut rng.0)
            .map_err(err)?;
        Ok((run.outputs, run.diverged_steps))
    }

    fn reset_state(&mut self) {
        self.0.reset_state();
    }

    fn w_out(&self) -> Vec<f64> {
        self.0.w_out().to_vec()
    }

    fn n(&self) -> usize {
        self.0.n()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        EsnModel::load(&path).map(PyEsnModel).map_err(err)
    }
}

/// Post-transient Mackey-Glass samples.
#[pyfunction]
#[pyo3(signature = (length, beta = 0.2, gamma = 0.1, tau = 17.0, n = 10.0, dt = 0.1,
                    transient = 1000.0, history = 1.2, initial = 1.21))]
#[allow(clippy::too_many_arguments)]
fn mg_series(
    length: usize,
    beta: f64,
    gamma: f64,
    tau: f64,
    n: f64,
    dt: f64,
    transient: f64,
    history: f64,
    initial: f64,
) -> PyResult<Vec<f64>> {
    let params = MgParams {
        beta,
        gamma,
        tau,
        n,
        dt,
        transient,
        history,
        initial,
    };
    integrate(&params, length).map(|s| s.values).map_err(err)
}

#[pyfunction(name = "rmse")]
fn py_rmse(pred: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    rmse(&pred, &truth).map_err(err)
}

/// Five-number summary plus mean as a dict.
#[pyfunction(name = "box_stats")]
fn py_box_stats(py: Python<'_>, samples: Vec<f64>) -> PyResult<Py<PyDict>> {
    let s = box_stats(&samples).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("min", s.min)?;
    d.set_item("q1", s.q1)?;
    d.set_item("median", s.median)?;
    d.set_item("q3", s.q3)?;
    d.set_item("max", s.max)?;
    d.set_item("mean", s.mean)?;
    d.set_item("count", s.count)?;
    Ok(d.into())
}

/// Largest eigenvalue magnitude of a square matrix given as rows.
#[pyfunction(name = "spectral_radius")]
fn py_spectral_radius(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in &rows {
        if row.len() != n {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        data.extend_from_slice(row);
    }
    let m = Matrix::from_vec(n, n, data).map_err(err)?;
    spectral_radius(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER).map_err(err)
}

#[pymodule]
fn noisynets_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRngStream>()?;
    m.add_class::<PyNoiseSpec>()?;
    m.add_class::<PyLabeledImageSet>()?;
    m.add_class::<PyDenseNet>()?;
    m.add_class::<PyEsnModel>()?;
    m.add_function(wrap_pyfunction!(mg_series, m)?)?;
    m.add_function(wrap_pyfunction!(py_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(py_box_stats, m)?)?;
    m.add_function(wrap_pyfunction!(py_spectral_radius, m)?)?;
    m.add("TRAIN_LEN", TRAIN_LEN)?;
    m.add("TEST_LEN", TEST_LEN)?;
    Ok(())
}
