//! The three trainable networks and their exact forward/backward passes.
//!
//! - `fused_lstm`: (window, 4) inputs of sentiment + normalized close through
//!   three stacked 50-unit LSTM layers (return sequences, return sequences,
//!   last step only) into a linear Dense(1) head.
//! - `price_lstm`: identical stack over (window, 1) close-only inputs.
//! - `dnn`: the flattened window of closes through a frozen standardization
//!   stage, then Dense(256) → Dense(128) → Dense(64) with leaky ReLU (0.01)
//!   and a linear Dense(1) head.
//!
//! Parameter blocks flatten in one documented order shared by gradients,
//! the optimizer, and checkpoints: each LSTM layer's (W, U, b) from the
//! input layer upward, then each dense layer's (W, b). The standardization
//! stage is frozen and never appears in the flat vector.

mod dense;
mod lstm;

pub use dense::{
    dense_backward, dense_forward, DenseCache, DenseGrads, DenseLayerParams, Standardize,
};
pub use lstm::{
    lstm_cell_step, lstm_forward, lstm_layer_backward, LstmLayerCache, LstmLayerGrads,
    LstmLayerParams, LstmStepCache, GATES,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{streams, Activation, Rng, Tensor, DEFAULT_LEAKY_ALPHA};

/// Hidden width of every LSTM layer.
pub const LSTM_UNITS: usize = 50;
/// Depth of the LSTM stack.
pub const LSTM_LAYERS: usize = 3;
/// Hidden widths of the DNN trunk.
pub const DNN_HIDDEN: [usize; 3] = [256, 128, 64];

/// Which network a parameter set belongs to. Variant order is the
/// comparison-report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Architecture {
    FusedLstm,
    PriceLstm,
    Dnn,
}

impl Architecture {
    /// Report/CLI ordering: fused first, then price-only LSTM, then DNN.
    pub const ALL: [Architecture; 3] =
        [Architecture::FusedLstm, Architecture::PriceLstm, Architecture::Dnn];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::FusedLstm => "fused_lstm",
            Architecture::PriceLstm => "price_lstm",
            Architecture::Dnn => "dnn",
        }
    }

    /// Features per time step in the input window.
    pub fn feature_dim(self) -> usize {
        match self {
            Architecture::FusedLstm => 4,
            Architecture::PriceLstm | Architecture::Dnn => 1,
        }
    }

    /// Whether input windows carry the sentiment block.
    pub fn fused(self) -> bool {
        matches!(self, Architecture::FusedLstm)
    }

    /// Stable one-byte tag used by the checkpoint format.
    pub fn tag(self) -> u8 {
        match self {
            Architecture::FusedLstm => 0,
            Architecture::PriceLstm => 1,
            Architecture::Dnn => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Architecture> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.tag() == tag)
            .ok_or_else(|| Error::format(format!("unknown architecture tag {tag}"), None))
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Architecture> {
        Architecture::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::argument(format!(
                "unknown architecture '{s}' (expected fused_lstm, price_lstm, or dnn)"
            ))
        })
    }
}

/// Full parameter set for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub window: usize,
    pub feature_dim: usize,
    pub lstm: Vec<LstmLayerParams>,
    /// Frozen input standardization; present only for the DNN.
    pub standardize: Option<Standardize>,
    pub dense: Vec<DenseLayerParams>,
}

impl ModelParams {
    /// Builds a freshly initialized network. Weights are drawn from the
    /// seed's INIT stream in a fixed order (each LSTM layer's W then U from
    /// the input layer upward, then each dense W); biases start at zero.
    pub fn new(arch: Architecture, window: usize, seed: u64) -> Result<ModelParams> {
        if window == 0 {
            return Err(Error::argument("window must be at least 1"));
        }
        let mut rng = Rng::with_stream(seed, streams::INIT);
        let feature_dim = arch.feature_dim();
        match arch {
            Architecture::FusedLstm | Architecture::PriceLstm => {
                let mut layers = Vec::with_capacity(LSTM_LAYERS);
                let mut input_dim = feature_dim;
                for depth in 0..LSTM_LAYERS {
                    let return_sequences = depth + 1 < LSTM_LAYERS;
                    layers.push(LstmLayerParams::new(
                        input_dim,
                        LSTM_UNITS,
                        return_sequences,
                        &mut rng,
                    )?);
                    input_dim = LSTM_UNITS;
                }
                let head =
                    DenseLayerParams::new(LSTM_UNITS, 1, Activation::Linear, 0.0, &mut rng)?;
                Ok(ModelParams {
                    arch,
                    window,
                    feature_dim,
                    lstm: layers,
                    standardize: None,
                    dense: vec![head],
                })
            }
            Architecture::Dnn => {
                let mut dense = Vec::with_capacity(DNN_HIDDEN.len() + 1);
                let mut in_dim = window;
                for width in DNN_HIDDEN {
                    dense.push(DenseLayerParams::new(
                        in_dim,
                        width,
                        Activation::LeakyRelu,
                        DEFAULT_LEAKY_ALPHA,
                        &mut rng,
                    )?);
                    in_dim = width;
                }
                dense.push(DenseLayerParams::new(in_dim, 1, Activation::Linear, 0.0, &mut rng)?);
                Ok(ModelParams {
                    arch,
                    window,
                    feature_dim,
                    lstm: Vec::new(),
                    standardize: Some(Standardize::identity(window)),
                    dense,
                })
            }
        }
    }

    /// Exact count of learnable scalars (the frozen standardization stage
    /// does not count).
    pub fn count_params(&self) -> usize {
        self.lstm.iter().map(LstmLayerParams::param_count).sum::<usize>()
            + self.dense.iter().map(DenseLayerParams::param_count).sum::<usize>()
    }

    /// Learnable parameters in the documented block order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.count_params());
        for layer in &self.lstm {
            flat.extend_from_slice(layer.w.data());
            flat.extend_from_slice(layer.u.data());
            flat.extend_from_slice(layer.b.data());
        }
        for layer in &self.dense {
            flat.extend_from_slice(layer.w.data());
            flat.extend_from_slice(layer.b.data());
        }
        flat
    }

    /// Writes a flat vector (in `flatten` order) back into the blocks.
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.count_params() {
            return Err(Error::argument(format!(
                "flat parameter vector has {} values, model holds {}",
                flat.len(),
                self.count_params()
            )));
        }
        let mut offset = 0;
        let mut take = |data: &mut [f64]| {
            data.copy_from_slice(&flat[offset..offset + data.len()]);
            offset += data.len();
        };
        for layer in &mut self.lstm {
            take(layer.w.data_mut());
            take(layer.u.data_mut());
            take(layer.b.data_mut());
        }
        for layer in &mut self.dense {
            take(layer.w.data_mut());
            take(layer.b.data_mut());
        }
        Ok(())
    }

    /// Named parameter blocks in serialization order, frozen blocks
    /// included.
    pub fn blocks(&self) -> Vec<Block<'_>> {
        let mut blocks = Vec::new();
        for (idx, layer) in self.lstm.iter().enumerate() {
            blocks.push(Block::tensor(format!("lstm{idx}.w"), true, &layer.w));
            blocks.push(Block::tensor(format!("lstm{idx}.u"), true, &layer.u));
            blocks.push(Block::tensor(format!("lstm{idx}.b"), true, &layer.b));
        }
        if let Some(s) = &self.standardize {
            blocks.push(Block {
                name: "standardize.mean".to_string(),
                learnable: false,
                shape: vec![s.dim()],
                data: &s.mean,
            });
            blocks.push(Block {
                name: "standardize.std".to_string(),
                learnable: false,
                shape: vec![s.dim()],
                data: &s.std,
            });
        }
        for (idx, layer) in self.dense.iter().enumerate() {
            blocks.push(Block::tensor(format!("dense{idx}.w"), true, &layer.w));
            blocks.push(Block::tensor(format!("dense{idx}.b"), true, &layer.b));
        }
        blocks
    }

    /// Mutable view of one named block's values, for checkpoint restore.
    pub fn block_data_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        for (idx, layer) in self.lstm.iter_mut().enumerate() {
            if name == format!("lstm{idx}.w") {
                return Some(layer.w.data_mut());
            }
            if name == format!("lstm{idx}.u") {
                return Some(layer.u.data_mut());
            }
            if name == format!("lstm{idx}.b") {
                return Some(layer.b.data_mut());
            }
        }
        if let Some(s) = &mut self.standardize {
            if name == "standardize.mean" {
                return Some(&mut s.mean);
            }
            if name == "standardize.std" {
                return Some(&mut s.std);
            }
        }
        for (idx, layer) in self.dense.iter_mut().enumerate() {
            if name == format!("dense{idx}.w") {
                return Some(layer.w.data_mut());
            }
            if name == format!("dense{idx}.b") {
                return Some(layer.b.data_mut());
            }
        }
        None
    }
}

/// A read-only view of one parameter block.
#[derive(Debug, Clone)]
pub struct Block<'a> {
    pub name: String,
    pub learnable: bool,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl<'a> Block<'a> {
    fn tensor(name: String, learnable: bool, t: &'a Tensor) -> Block<'a> {
        Block { name, learnable, shape: t.shape().to_vec(), data: t.data() }
    }
}

/// Per-sample forward caches, retained for backward.
#[derive(Debug, Clone)]
pub struct SampleCache {
    lstm: Vec<LstmLayerCache>,
    dense: Vec<DenseCache>,
}

/// Batch forward cache; consumed by [`model_backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    arch: Architecture,
    samples: Vec<SampleCache>,
}

impl ForwardCache {
    pub fn batch_len(&self) -> usize {
        self.samples.len()
    }
}

fn check_batch_shapes(params: &ModelParams, inputs: &[&Tensor]) -> Result<()> {
    let expected = [params.window, params.feature_dim];
    for (idx, input) in inputs.iter().enumerate() {
        if input.shape() != expected {
            return Err(Error::shape(format!(
                "{}: sample {idx} has shape {:?}, expected {:?}",
                params.arch,
                input.shape(),
                expected
            )));
        }
    }
    Ok(())
}

fn forward_one(params: &ModelParams, input: &Tensor) -> Result<(f64, SampleCache)> {
    let mut lstm_caches = Vec::with_capacity(params.lstm.len());
    let mut dense_caches = Vec::with_capacity(params.dense.len());

    let mut x: Vec<f64> = if params.lstm.is_empty() {
        // DNN: flatten the (window, 1) closes and standardize.
        let s = params
            .standardize
            .as_ref()
            .ok_or_else(|| Error::State("dnn params missing standardization stage".to_string()))?;
        s.apply(input.data())?
    } else {
        let mut seq = input.clone();
        let mut last = Vec::new();
        for layer in &params.lstm {
            let (out, cache) = lstm_forward(layer, &seq)?;
            lstm_caches.push(cache);
            if layer.return_sequences {
                seq = out;
            } else {
                last = out.into_data();
            }
        }
        last
    };

    for layer in &params.dense {
        let (y, cache) = dense_forward(layer, &x)?;
        dense_caches.push(cache);
        x = y;
    }
    debug_assert_eq!(x.len(), 1);
    Ok((x[0], SampleCache { lstm: lstm_caches, dense: dense_caches }))
}

/// Runs the batch forward pass. Samples are independent; predictions come
/// back in input order with the caches backward needs.
pub fn model_forward(params: &ModelParams, inputs: &[&Tensor]) -> Result<(Vec<f64>, ForwardCache)> {
    check_batch_shapes(params, inputs)?;
    let mut predictions = Vec::with_capacity(inputs.len());
    let mut samples = Vec::with_capacity(inputs.len());
    for input in inputs {
        let (pred, cache) = forward_one(params, input)?;
        predictions.push(pred);
        samples.push(cache);
    }
    Ok((predictions, ForwardCache { arch: params.arch, samples }))
}

/// Forward pass without cache retention, for inference paths.
pub fn model_predict(params: &ModelParams, inputs: &[&Tensor]) -> Result<Vec<f64>> {
    check_batch_shapes(params, inputs)?;
    let mut predictions = Vec::with_capacity(inputs.len());
    for input in inputs {
        predictions.push(forward_one(params, input)?.0);
    }
    Ok(predictions)
}

/// Gradients for every learnable block, shapes mirroring [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub lstm: Vec<LstmLayerGrads>,
    pub dense: Vec<DenseGrads>,
}

impl ModelGrads {
    pub fn zeros_like(params: &ModelParams) -> ModelGrads {
        ModelGrads {
            lstm: params.lstm.iter().map(LstmLayerGrads::zeros_like).collect(),
            dense: params.dense.iter().map(DenseGrads::zeros_like).collect(),
        }
    }

    /// Same block order as [`ModelParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.lstm {
            flat.extend_from_slice(layer.dw.data());
            flat.extend_from_slice(layer.du.data());
            flat.extend_from_slice(layer.db.data());
        }
        for layer in &self.dense {
            flat.extend_from_slice(layer.dw.data());
            flat.extend_from_slice(layer.db.data());
        }
        flat
    }

    pub fn all_finite(&self) -> bool {
        self.lstm.iter().all(|l| l.dw.all_finite() && l.du.all_finite() && l.db.all_finite())
            && self.dense.iter().all(|l| l.dw.all_finite() && l.db.all_finite())
    }

    /// Name of the first block holding a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        for (idx, l) in self.lstm.iter().enumerate() {
            for (suffix, t) in [("w", &l.dw), ("u", &l.du), ("b", &l.db)] {
                if !t.all_finite() {
                    return Some(format!("lstm{idx}.{suffix}"));
                }
            }
        }
        for (idx, l) in self.dense.iter().enumerate() {
            for (suffix, t) in [("w", &l.dw), ("b", &l.db)] {
                if !t.all_finite() {
                    return Some(format!("dense{idx}.{suffix}"));
                }
            }
        }
        None
    }
}

/// Full backward pass: BPTT through the LSTM stack, standard backprop
/// through the dense layers. Gradients are SUMMED over the batch; the loss
/// gradient already carries any 1/N averaging. `d_pred[k]` is
/// dLoss/dPred for sample k of the forward call that produced `cache`.
pub fn model_backward(
    params: &ModelParams,
    cache: &ForwardCache,
    d_pred: &[f64],
) -> Result<ModelGrads> {
    if cache.arch != params.arch {
        return Err(Error::State(format!(
            "cache was built by {} but params are {}",
            cache.arch, params.arch
        )));
    }
    if d_pred.len() != cache.samples.len() {
        return Err(Error::State(format!(
            "cache holds {} samples, upstream gradient has {}",
            cache.samples.len(),
            d_pred.len()
        )));
    }

    let mut grads = ModelGrads::zeros_like(params);
    for (sample, &dp) in cache.samples.iter().zip(d_pred) {
        if sample.dense.len() != params.dense.len() || sample.lstm.len() != params.lstm.len() {
            return Err(Error::State(
                "cache layer count does not match params (stale cache)".to_string(),
            ));
        }
        // Dense chain, output first.
        let mut dx = vec![dp];
        for (idx, layer) in params.dense.iter().enumerate().rev() {
            dx = dense_backward(layer, &sample.dense[idx], &dx, &mut grads.dense[idx])?;
        }
        // LSTM stack, top layer first. The top layer emitted only its last
        // step, so its upstream gradient is a (units) vector; lower layers
        // receive full (steps, units) gradients.
        if !params.lstm.is_empty() {
            let mut d_out = Tensor::from_vec(&[dx.len()], dx)?;
            for (idx, layer) in params.lstm.iter().enumerate().rev() {
                d_out =
                    lstm_layer_backward(layer, &sample.lstm[idx], &d_out, &mut grads.lstm[idx])?;
            }
        }
    }
    Ok(grads)
}
