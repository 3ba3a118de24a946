//! Python bindings over the forecasting library: sentiment scoring,
//! scaling, metrics, model inference, and checkpoint loading.
//!
//! Build with `cargo build -p stockcast-py`; the resulting cdylib imports
//! as `stockcast_py` (see python/smoke_test.py for the rename dance).

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use stockcast::dataset::{fit_minmax, MinMaxScaler};
use stockcast::models::{model_predict, Architecture, ModelParams};
use stockcast::numerics::Tensor;
use stockcast::sentiment::{
    score_headline, tokenize_and_pad, Lexicon, LexiconScorer, DEFAULT_MAX_LEN,
};

fn py_err(e: stockcast::Error) -> PyErr {
    match &e {
        stockcast::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Numerically stable softmax over a list of logits.
#[pyfunction]
fn softmax(logits: Vec<f64>) -> PyResult<Vec<f64>> {
    stockcast::numerics::softmax(&logits).map_err(py_err)
}

/// Mean absolute error between two equal-length sequences.
#[pyfunction]
fn mae(pred: Vec<f64>, actual: Vec<f64>) -> PyResult<f64> {
    stockcast::metrics::mae(&pred, &actual).map_err(py_err)
}

/// Mean absolute percentage error; every actual must be nonzero.
#[pyfunction]
fn mape(pred: Vec<f64>, actual: Vec<f64>) -> PyResult<f64> {
    stockcast::metrics::mape(&pred, &actual).map_err(py_err)
}

/// Accuracy as 1 - MAPE.
#[pyfunction]
fn accuracy(mape_value: f64) -> f64 {
    stockcast::metrics::accuracy(mape_value)
}

/// Lowercased, punctuation-split tokens, truncated to max_len.
#[pyfunction]
#[pyo3(signature = (title, max_len = DEFAULT_MAX_LEN))]
fn tokenize(title: &str, max_len: usize) -> PyResult<Vec<String>> {
    Ok(tokenize_and_pad(title, max_len).map_err(py_err)?.content().to_vec())
}

/// Headline sentiment scorer backed by a word-class lexicon.
#[pyclass(name = "Scorer")]
struct PyScorer {
    inner: LexiconScorer,
    max_len: usize,
}

#[pymethods]
impl PyScorer {
    /// Uses the built-in starter lexicon unless a lexicon file is given.
    #[new]
    #[pyo3(signature = (lexicon_path = None, max_len = DEFAULT_MAX_LEN))]
    fn new(lexicon_path: Option<&str>, max_len: usize) -> PyResult<Self> {
        let lexicon = match lexicon_path {
            Some(p) => Lexicon::load(p).map_err(py_err)?,
            None => Lexicon::starter(),
        };
        Ok(PyScorer { inner: LexiconScorer::new(lexicon), max_len })
    }

    /// Probability triple (neutral, positive, negative); sums to 1.
    fn score(&self, title: &str) -> PyResult<(f64, f64, f64)> {
        let tokens = tokenize_and_pad(title, self.max_len).map_err(py_err)?;
        let d = score_headline(&tokens, &self.inner).map_err(py_err)?;
        Ok((d.neutral, d.positive, d.negative))
    }
}

/// Min-max scaler fitted on a training series.
#[pyclass(name = "Scaler")]
struct PyScaler {
    inner: MinMaxScaler,
}

#[pymethods]
impl PyScaler {
    #[staticmethod]
    fn fit(values: Vec<f64>) -> PyResult<Self> {
        Ok(PyScaler { inner: fit_minmax(&values).map_err(py_err)? })
    }

    fn normalize(&self, x: f64) -> f64 {
        self.inner.normalize(x)
    }

    fn denormalize(&self, x: f64) -> f64 {
        self.inner.denormalize(x)
    }

    #[getter]
    fn min(&self) -> f64 {
        self.inner.min
    }

    #[getter]
    fn max(&self) -> f64 {
        self.inner.max
    }
}

/// One forecasting network with seeded initial parameters.
#[pyclass(name = "Model")]
struct PyModel {
    params: ModelParams,
}

#[pymethods]
impl PyModel {
    /// arch is one of "fused_lstm", "price_lstm", "dnn".
    #[new]
    #[pyo3(signature = (arch, window = 8, seed = 42))]
    fn new(arch: &str, window: usize, seed: u64) -> PyResult<Self> {
        let arch: Architecture = arch.parse().map_err(py_err)?;
        Ok(PyModel { params: ModelParams::new(arch, window, seed).map_err(py_err)? })
    }

    #[getter]
    fn arch(&self) -> String {
        self.params.arch.to_string()
    }

    #[getter]
    fn window(&self) -> usize {
        self.params.window
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.params.feature_dim
    }

    fn count_params(&self) -> usize {
        self.params.count_params()
    }

    /// Predicts the normalized next close for each window. Every window is
    /// a window-length list of feature rows.
    fn predict(&self, batch: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
        let mut tensors = Vec::with_capacity(batch.len());
        for (i, window) in batch.iter().enumerate() {
            let rows = window.len();
            let cols = window.first().map(Vec::len).unwrap_or(0);
            if window.iter().any(|r| r.len() != cols) {
                return Err(PyValueError::new_err(format!(
                    "window {i} has ragged rows; expected {cols} features in each"
                )));
            }
            let tensor = Tensor::from_vec(&[rows, cols], window.concat()).map_err(py_err)?;
            tensors.push(tensor);
        }
        let refs: Vec<&Tensor> = tensors.iter().collect();
        model_predict(&self.params, &refs).map_err(py_err)
    }
}

/// Loads a trained checkpoint: (model, scaler, best_epoch, validation_loss).
#[pyfunction]
fn load_checkpoint(path: &str) -> PyResult<(PyModel, PyScaler, usize, f64)> {
    let ckpt = stockcast::checkpoint::load(path).map_err(py_err)?;
    Ok((
        PyModel { params: ckpt.params },
        PyScaler { inner: ckpt.scaler },
        ckpt.epoch,
        ckpt.validation_loss,
    ))
}

#[pymodule]
fn stockcast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(mape, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(load_checkpoint, m)?)?;
    m.add_class::<PyScorer>()?;
    m.add_class::<PyScaler>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
