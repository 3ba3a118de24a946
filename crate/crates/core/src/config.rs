//! Run configuration: defaults, key-value config files, and flag overrides.
//!
//! Precedence is fixed: built-in defaults, then the config file, then
//! command-line flags. Validation collects every problem before failing so
//! a bad config is fixed in one round.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::dataset::SplitSpec;
use crate::error::{Error, Result};
use crate::models::Architecture;
use crate::synth::SynthConfig;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub news: PathBuf,
    pub prices: PathBuf,
    /// None uses the built-in starter lexicon.
    pub lexicon: Option<PathBuf>,
    pub out: PathBuf,
    pub arch: Architecture,
    pub window: usize,
    pub max_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    /// None trains on the first ticker (alphabetical) in the price file.
    pub ticker: Option<String>,
    pub horizon: usize,
    pub train_fraction: f64,
    pub val_fraction_of_train: f64,
    pub synth_tickers: Vec<String>,
    pub synth_bars: usize,
    pub synth_start: NaiveDate,
    pub synth_initial_price: f64,
    pub synth_drift: f64,
    pub synth_volatility: f64,
    pub synth_coupling: f64,
    pub synth_headlines: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        let synth = SynthConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            news: PathBuf::from("news.csv"),
            prices: PathBuf::from("prices.csv"),
            lexicon: None,
            out: PathBuf::from("out"),
            arch: Architecture::FusedLstm,
            window: crate::dataset::WINDOW,
            max_len: crate::sentiment::DEFAULT_MAX_LEN,
            epochs: train.epochs,
            batch_size: train.batch_size,
            seed: train.seed,
            learning_rate: train.lr,
            clip_norm: None,
            ticker: None,
            horizon: 100,
            train_fraction: 0.85,
            val_fraction_of_train: 0.15,
            synth_tickers: synth.tickers,
            synth_bars: synth.bars,
            synth_start: synth.start_date,
            synth_initial_price: synth.initial_price,
            synth_drift: synth.drift,
            synth_volatility: synth.volatility,
            synth_coupling: synth.coupling,
            synth_headlines: synth.headlines_per_day,
        }
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped. Returns (key, value, line number) triples in file order.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::format(
                format!("expected 'key = value', got '{}'", raw.trim()),
                Some(i + 1),
            ));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string(), i + 1));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Applies one key from a config file. Returns a description of the
    /// problem instead of an error so callers can collect all of them.
    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("{key}: cannot parse '{value}'"))
        }
        match key {
            "news" => self.news = PathBuf::from(value),
            "prices" => self.prices = PathBuf::from(value),
            "lexicon" => self.lexicon = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "arch" => self.arch = value.parse().map_err(|e: Error| e.to_string())?,
            "window" => self.window = parse(key, value)?,
            "max_len" => self.max_len = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "clip_norm" => self.clip_norm = Some(parse(key, value)?),
            "ticker" => self.ticker = Some(value.to_string()),
            "horizon" => self.horizon = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "val_fraction_of_train" => self.val_fraction_of_train = parse(key, value)?,
            "synth_tickers" => {
                self.synth_tickers =
                    value.split(',').map(|t| t.trim().to_string()).collect();
            }
            "synth_bars" => self.synth_bars = parse(key, value)?,
            "synth_start" => {
                self.synth_start = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                    .map_err(|_| format!("{key}: cannot parse '{value}' as YYYY-MM-DD"))?;
            }
            "synth_initial_price" => self.synth_initial_price = parse(key, value)?,
            "synth_drift" => self.synth_drift = parse(key, value)?,
            "synth_volatility" => self.synth_volatility = parse(key, value)?,
            "synth_coupling" => self.synth_coupling = parse(key, value)?,
            "synth_headlines" => self.synth_headlines = parse(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Loads a config file over the current values, reporting every bad
    /// line at once.
    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pairs = parse_config_text(&text)?;
        let mut problems = Vec::new();
        for (key, value, line) in pairs {
            if let Err(p) = self.apply(&key, &value) {
                problems.push(format!("line {line}: {p}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "config file {}: {}",
                path.display(),
                problems.join("; ")
            )))
        }
    }

    /// Checks every field and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.window < 1 {
            problems.push("window must be at least 1".to_string());
        }
        if self.max_len < 1 {
            problems.push("max_len must be at least 1".to_string());
        }
        if self.epochs < 1 {
            problems.push("epochs must be at least 1".to_string());
        }
        if self.batch_size < 1 {
            problems.push("batch_size must be at least 1".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                problems.push(format!("clip_norm must be positive, got {c}"));
            }
        }
        if self.horizon < 1 {
            problems.push("horizon must be at least 1".to_string());
        }
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(f > 0.0 && f < 1.0) {
                problems.push(format!("{name} must lie strictly between 0 and 1, got {f}"));
            }
        }
        if let Err(e) = self.to_synth_config().validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::argument(problems.join("; ")))
        }
    }

    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            clip_norm: self.clip_norm,
            lr: self.learning_rate,
            ..TrainConfig::default()
        }
    }

    pub fn to_split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            val_fraction_of_train: self.val_fraction_of_train,
        }
    }

    /// Synth generation settings. A --ticker override narrows generation
    /// to that single symbol.
    pub fn to_synth_config(&self) -> SynthConfig {
        let tickers = match &self.ticker {
            Some(t) => vec![t.clone()],
            None => self.synth_tickers.clone(),
        };
        SynthConfig {
            tickers,
            bars: self.synth_bars,
            start_date: self.synth_start,
            initial_price: self.synth_initial_price,
            drift: self.synth_drift,
            volatility: self.synth_volatility,
            coupling: self.synth_coupling,
            headlines_per_day: self.synth_headlines,
            seed: self.seed,
        }
    }
}
