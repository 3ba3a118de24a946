//! MSE loss, Adam, the epoch loop with best-on-validation checkpointing,
//! and walk-forward forecasting.
//!
//! Unit convention: training and validation losses are in NORMALIZED close
//! units (the model's input/output space); forecast rows are denormalized
//! back to currency units via the checkpoint's scaler.

use chrono::NaiveDate;

use crate::dataset::{MinMaxScaler, NormalizedBar, SentimentLookup, WindowSample};
use crate::error::{Error, Result};
use crate::models::{
    model_backward, model_forward, model_predict, ModelParams, Standardize,
};
use crate::numerics::{streams, Rng, Tensor};
use crate::sentiment::SentimentDistribution;

/// Mean squared error and its gradient with respect to the predictions:
/// loss = (1/N)·Σ(pred−target)², dLoss/dPred = (2/N)·(pred−target).
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "mse_loss: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::argument("mse_loss needs at least one prediction"));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 / n * d);
    }
    Ok((loss / n, grad))
}

/// Adam optimizer state over the flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Step counter; incremented before bias correction on every step.
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Canonical defaults: lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn new(dim: usize) -> AdamState {
        AdamState::with_hyperparams(dim, 0.001, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparams(dim: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> AdamState {
        AdamState { m: vec![0.0; dim], v: vec![0.0; dim], t: 0, lr, beta1, beta2, eps }
    }
}

/// One Adam update in place:
/// m ← β1·m + (1−β1)·g; v ← β2·v + (1−β2)·g²;
/// p ← p − lr·m̂/(√v̂ + ε) with bias-corrected m̂ = m/(1−β1ᵗ), v̂ = v/(1−β2ᵗ).
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(format!(
            "adam_step: {} params, {} grads, state dim {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(idx) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(format!(
            "non-finite gradient at flat parameter index {idx}"
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for ((p, g), (m, v)) in
        params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Scales the gradient vector so its L2 norm is at most `clip_norm`.
/// Returns the pre-clip norm.
pub fn clip_gradients(grads: &mut [f64], clip_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > clip_norm && norm > 0.0 {
        let scale = clip_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Training-loop knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Optional L2 gradient-norm clip; off by default.
    pub clip_norm: Option<f64>,
    pub shuffle_each_epoch: bool,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            seed: 42,
            clip_norm: None,
            shuffle_each_epoch: true,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::argument("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::argument("batch_size must be at least 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::argument(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::argument(format!("clip_norm must be finite and > 0, got {c}")));
            }
        }
        Ok(())
    }
}

/// One epoch's loss summary. Losses are in normalized units; train_loss is
/// the sample-weighted mean of the batch losses seen during the epoch,
/// val_loss the full-validation MSE after the epoch's updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// The best-on-validation parameter snapshot plus everything needed to use
/// it later: the scaler for denormalization and the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// 1-based epoch whose post-update validation loss was lowest.
    pub epoch: usize,
    pub validation_loss: f64,
    pub scaler: MinMaxScaler,
    pub seed: u64,
}

/// Full-set MSE with no parameter updates.
pub fn evaluate_mse(params: &ModelParams, samples: &[WindowSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("cannot evaluate MSE on an empty sample set"));
    }
    let refs: Vec<&Tensor> = samples.iter().map(|s| &s.inputs).collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    let preds = model_predict(params, &refs)?;
    Ok(mse_loss(&preds, &targets)?.0)
}

/// Runs exactly `cfg.epochs` epochs of mini-batch Adam on MSE, evaluating
/// full-validation loss after each epoch and retaining the strictly lowest
/// (earliest on ties). The DNN's frozen standardization statistics are
/// fitted on the training inputs before the first update. Deterministic
/// given (initial params, data order, cfg.seed).
pub fn train(
    initial: &ModelParams,
    train_samples: &[WindowSample],
    val_samples: &[WindowSample],
    scaler: MinMaxScaler,
    cfg: &TrainConfig,
) -> Result<(Checkpoint, Vec<EpochStats>)> {
    cfg.validate()?;
    if train_samples.is_empty() {
        return Err(Error::argument("training set is empty"));
    }
    if val_samples.is_empty() {
        return Err(Error::argument("validation set is empty"));
    }

    let mut params = initial.clone();
    if params.standardize.is_some() {
        let rows: Vec<Vec<f64>> =
            train_samples.iter().map(|s| s.inputs.data().to_vec()).collect();
        params.standardize = Some(Standardize::fit(&rows)?);
    }

    let mut adam = AdamState::with_hyperparams(
        params.count_params(),
        cfg.lr,
        cfg.beta1,
        cfg.beta2,
        cfg.eps,
    );
    let mut shuffle_rng = Rng::with_stream(cfg.seed, streams::SHUFFLE);
    let mut order: Vec<usize> = (0..train_samples.len()).collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle_each_epoch {
            shuffle_rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&Tensor> = batch.iter().map(|&i| &train_samples[i].inputs).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| train_samples[i].target).collect();

            let (preds, cache) = model_forward(&params, &refs)?;
            let (loss, d_pred) = mse_loss(&preds, &targets)?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite training loss {loss} at epoch {epoch}, batch {batch_idx}"
                )));
            }
            loss_sum += loss * batch.len() as f64;

            let grads = model_backward(&params, &cache, &d_pred)?;
            if let Some(block) = grads.first_non_finite() {
                return Err(Error::numeric(format!(
                    "non-finite gradient in block {block} at epoch {epoch}, batch {batch_idx}"
                )));
            }
            let mut flat_grads = grads.flatten();
            if let Some(clip) = cfg.clip_norm {
                clip_gradients(&mut flat_grads, clip);
            }
            let mut flat_params = params.flatten();
            adam_step(&mut flat_params, &flat_grads, &mut adam)?;
            params.unflatten(&flat_params)?;
        }

        let train_loss = loss_sum / train_samples.len() as f64;
        let val_loss = evaluate_mse(&params, val_samples)?;
        if !val_loss.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite validation loss {val_loss} after epoch {epoch}"
            )));
        }
        history.push(EpochStats { epoch, train_loss, val_loss });

        let improved = best.as_ref().map_or(true, |b| val_loss < b.validation_loss);
        if improved {
            best = Some(Checkpoint {
                params: params.clone(),
                epoch,
                validation_loss: val_loss,
                scaler,
                seed: cfg.seed,
            });
        }
    }

    Ok((best.expect("epochs >= 1 guarantees a best checkpoint"), history))
}

/// One forecast day: denormalized prediction and actual.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub predicted: f64,
    pub actual: f64,
}

/// Walk-forward result plus whether the horizon was cut short by data.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub rows: Vec<ForecastRow>,
    pub truncated: bool,
}

/// Walk-forward, one step ahead over `bars` (normalized closes, context
/// first): day t's input window is the previous `window` ACTUAL closes,
/// never earlier predictions, with the fused model reading the most recent
/// input day's sentiment. The first `window` bars are pure context; up to
/// `horizon` following days are forecast, truncating when the data runs
/// out. Output is denormalized.
pub fn rolling_forecast(
    checkpoint: &Checkpoint,
    bars: &[NormalizedBar],
    sentiment: &SentimentLookup,
    horizon: usize,
) -> Result<Forecast> {
    let window = checkpoint.params.window;
    if bars.len() < window {
        return Err(Error::argument(format!(
            "rolling forecast needs at least {window} context bars, got {}",
            bars.len()
        )));
    }
    let available = bars.len() - window;
    let days = horizon.min(available);
    let fused = checkpoint.params.arch.fused();
    let features = checkpoint.params.feature_dim;

    let mut rows = Vec::with_capacity(days);
    for t in window..window + days {
        let mut data = Vec::with_capacity(window * features);
        let context = if fused {
            Some(
                sentiment
                    .get(&bars[t - 1].date)
                    .copied()
                    .unwrap_or_else(SentimentDistribution::uniform),
            )
        } else {
            None
        };
        for step in (t - window)..t {
            if let Some(dist) = context {
                data.extend_from_slice(&dist.as_array());
            }
            data.push(bars[step].close);
        }
        let input = Tensor::from_vec(&[window, features], data)?;
        let pred = model_predict(&checkpoint.params, &[&input])?[0];
        rows.push(ForecastRow {
            date: bars[t].date,
            predicted: checkpoint.scaler.denormalize(pred),
            actual: checkpoint.scaler.denormalize(bars[t].close),
        });
    }
    Ok(Forecast { rows, truncated: days < horizon })
}
