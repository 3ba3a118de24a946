//! News-sentiment-fused stock price forecasting.
//!
//! The pipeline turns raw headline and daily price CSVs into supervised
//! windows, trains one of three from-scratch networks (a sentiment+price
//! LSTM, a price-only LSTM, and a price-only DNN) with MSE loss and Adam,
//! checkpoints the best parameters by validation loss, and emits walk-forward
//! forecasts with MAE / MAPE / Accuracy reports.
//!
//! Modules:
//! - [`numerics`]: tensors, activations, deterministic RNG, gradient checker
//! - [`sentiment`]: headline tokenization, pluggable scorers, daily aggregation
//! - [`dataset`]: CSV ingestion, chronological splits, normalization, windows
//! - [`models`]: the three architectures with analytic forward/backward passes
//! - [`training`]: MSE/Adam loop, validation checkpointing, walk-forward forecasts
//! - [`checkpoint`]: portable binary parameter archives
//! - [`metrics`]: MAE, MAPE, Accuracy, and report assembly
//! - [`synth`]: seeded synthetic news+price corpus generator
//! - [`plot`]: dependency-free SVG charts from the emitted CSVs
//! - [`config`] / [`cli`]: key-value run configuration and the command surface

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod plot;
pub mod sentiment;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
