//! Command-line surface: flag parsing, config resolution, and the seven
//! subcommands.
//!
//! Exit codes: 0 success, 2 config or validation error, 3 data error,
//! 4 numeric failure. Failures print a single line of the form
//! `error[<class>]: <message>` on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checkpoint;
use crate::config::RunConfig;
use crate::dataset::{
    group_by_ticker, load_news, load_prices, prepare_ticker, write_rejects, PreparedTicker,
    PriceBar, Reject,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, report_csv, report_table};
use crate::models::{Architecture, ModelParams};
use crate::plot;
use crate::sentiment::{
    aggregate_daily, score_headline, tokenize_and_pad, DailySentiment, Lexicon, LexiconScorer,
};
use crate::synth;
use crate::training::{rolling_forecast, train, Checkpoint, EpochStats};

#[derive(Parser, Debug)]
#[command(
    name = "stockcast",
    version,
    about = "News-aware next-day stock close forecasting"
)]
pub struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// One of fused_lstm, price_lstm, dnn.
    #[arg(long, global = true, value_name = "ARCH")]
    pub arch: Option<String>,
    #[arg(long, global = true, value_name = "SYM")]
    pub ticker: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub horizon: Option<usize>,
    /// Output directory for every generated file.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate seeded synthetic news and price CSVs.
    Synth,
    /// Validate the input CSVs, write reject reports and daily sentiment.
    Ingest,
    /// Train one architecture on one ticker.
    Train,
    /// Score a trained checkpoint on the test split.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Walk-forward forecast over the test period.
    Forecast {
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Render a history or forecast CSV to a static SVG.
    Plot { input: PathBuf },
    /// Train and evaluate all three architectures side by side.
    Compare,
}

/// Defaults, then config file, then flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(arch) = &cli.arch {
        cfg.arch = arch.parse()?;
    }
    if let Some(t) = &cli.ticker {
        cfg.ticker = Some(t.clone());
    }
    if let Some(e) = cli.epochs {
        cfg.epochs = e;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_)
        | Error::Shape(_)
        | Error::State(_)
        | Error::ArchitectureMismatch(_) => 2,
        Error::Io { .. }
        | Error::Format { .. }
        | Error::Scorer(_)
        | Error::DegenerateSeries(_)
        | Error::DivisionByZero { .. } => 3,
        Error::Numeric(_) => 4,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::Ingest => cmd_ingest(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Evaluate { checkpoint } => cmd_evaluate(&cfg, checkpoint.as_deref()),
        Command::Forecast { checkpoint } => cmd_forecast(&cfg, checkpoint.as_deref()),
        Command::Plot { input } => cmd_plot(&cfg, input),
        Command::Compare => cmd_compare(&cfg),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_lexicon(cfg: &RunConfig) -> Result<Lexicon> {
    match &cfg.lexicon {
        Some(p) => Lexicon::load(p),
        None => Ok(Lexicon::starter()),
    }
}

pub fn checkpoint_path(cfg: &RunConfig, arch: Architecture) -> PathBuf {
    cfg.out.join(format!("{arch}.ckpt"))
}

struct LoadedData {
    prices_by_ticker: BTreeMap<String, Vec<PriceBar>>,
    daily_sentiment: Vec<DailySentiment>,
    news_rejects: Vec<Reject>,
    price_rejects: Vec<Reject>,
    news_count: usize,
}

fn load_data(cfg: &RunConfig) -> Result<LoadedData> {
    let scorer = LexiconScorer::new(load_lexicon(cfg)?);
    let news = load_news(&cfg.news)?;
    let prices = load_prices(&cfg.prices)?;
    let mut scored = Vec::with_capacity(news.records.len());
    for n in &news.records {
        let tokens = tokenize_and_pad(&n.title, cfg.max_len)?;
        scored.push((n.date, n.ticker.clone(), score_headline(&tokens, &scorer)?));
    }
    Ok(LoadedData {
        prices_by_ticker: group_by_ticker(prices.records),
        daily_sentiment: aggregate_daily(&scored),
        news_rejects: news.rejects,
        price_rejects: prices.rejects,
        news_count: news.records.len(),
    })
}

fn pick_ticker<'a>(cfg: &RunConfig, data: &'a LoadedData) -> Result<(&'a str, &'a [PriceBar])> {
    match &cfg.ticker {
        Some(t) => data
            .prices_by_ticker
            .get_key_value(t)
            .map(|(k, v)| (k.as_str(), v.as_slice()))
            .ok_or_else(|| {
                Error::argument(format!("ticker {t} not present in {}", cfg.prices.display()))
            }),
        None => data
            .prices_by_ticker
            .iter()
            .next()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
            .ok_or_else(|| {
                Error::argument(format!("{} holds no usable price rows", cfg.prices.display()))
            }),
    }
}

fn prepared_for(cfg: &RunConfig, arch: Architecture, data: &LoadedData) -> Result<PreparedTicker> {
    let (ticker, bars) = pick_ticker(cfg, data)?;
    prepare_ticker(
        ticker,
        bars,
        &data.daily_sentiment,
        &cfg.to_split_spec(),
        cfg.window,
        arch.fused(),
    )
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let lexicon = load_lexicon(cfg)?;
    let out = synth::generate(&cfg.to_synth_config(), &lexicon)?;
    let news_path = cfg.out.join("news.csv");
    let prices_path = cfg.out.join("prices.csv");
    synth::write_news_csv(&news_path, &out.news)?;
    synth::write_prices_csv(&prices_path, &out.prices)?;
    println!("wrote {} headlines to {}", out.news.len(), news_path.display());
    println!("wrote {} bars to {}", out.prices.len(), prices_path.display());
    Ok(())
}

fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = load_data(cfg)?;
    write_rejects(cfg.out.join("news_rejects.csv"), &data.news_rejects)?;
    write_rejects(cfg.out.join("price_rejects.csv"), &data.price_rejects)?;

    let mut sentiment = String::from("date,ticker,neutral,positive,negative,headlines\n");
    for d in &data.daily_sentiment {
        sentiment.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.date.format("%Y-%m-%d"),
            d.ticker,
            d.distribution.neutral,
            d.distribution.positive,
            d.distribution.negative,
            d.headline_count
        ));
    }
    write_file(&cfg.out.join("daily_sentiment.csv"), &sentiment)?;

    let bar_count: usize = data.prices_by_ticker.values().map(Vec::len).sum();
    println!(
        "news: {} accepted, {} rejected; prices: {} accepted, {} rejected",
        data.news_count,
        data.news_rejects.len(),
        bar_count,
        data.price_rejects.len()
    );
    let spec = cfg.to_split_spec();
    for (ticker, bars) in &data.prices_by_ticker {
        let (tr, va, te) = spec.counts(bars.len());
        println!(
            "{ticker}: {} bars (train {tr}, validation {va}, test {te})",
            bars.len()
        );
    }
    Ok(())
}

fn train_one(
    cfg: &RunConfig,
    arch: Architecture,
    data: &LoadedData,
) -> Result<(Checkpoint, Vec<EpochStats>, PreparedTicker)> {
    let prepared = prepared_for(cfg, arch, data)?;
    let params = ModelParams::new(arch, cfg.window, cfg.seed)?;
    let (ckpt, history) = train(
        &params,
        &prepared.train,
        &prepared.validation,
        prepared.scaler,
        &cfg.to_train_config(),
    )?;
    Ok((ckpt, history, prepared))
}

fn save_run(
    cfg: &RunConfig,
    arch: Architecture,
    ckpt: &Checkpoint,
    history: &[EpochStats],
) -> Result<()> {
    checkpoint::save(checkpoint_path(cfg, arch), ckpt)?;
    write_file(
        &cfg.out.join(format!("history_{arch}.csv")),
        &plot::write_history_csv(history),
    )
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = load_data(cfg)?;
    let (ckpt, history, prepared) = train_one(cfg, cfg.arch, &data)?;
    save_run(cfg, cfg.arch, &ckpt, &history)?;
    println!(
        "trained {} on {}: {} train / {} validation / {} test windows",
        cfg.arch,
        prepared.ticker,
        prepared.train.len(),
        prepared.validation.len(),
        prepared.test.len()
    );
    println!(
        "best epoch {} of {}, validation loss {:.6e}",
        ckpt.epoch,
        history.len(),
        ckpt.validation_loss
    );
    println!("checkpoint: {}", checkpoint_path(cfg, cfg.arch).display());
    Ok(())
}

fn load_matching_checkpoint(cfg: &RunConfig, path: Option<&Path>) -> Result<Checkpoint> {
    let path = path
        .map(PathBuf::from)
        .unwrap_or_else(|| checkpoint_path(cfg, cfg.arch));
    let ckpt = checkpoint::load(&path)?;
    if ckpt.params.arch != cfg.arch {
        return Err(Error::ArchitectureMismatch(format!(
            "checkpoint {} holds {}, config requests {}",
            path.display(),
            ckpt.params.arch,
            cfg.arch
        )));
    }
    if ckpt.params.window != cfg.window {
        return Err(Error::ArchitectureMismatch(format!(
            "checkpoint {} uses window {}, config requests {}",
            path.display(),
            ckpt.params.window,
            cfg.window
        )));
    }
    Ok(ckpt)
}

fn cmd_evaluate(cfg: &RunConfig, ckpt_path: Option<&Path>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ckpt = load_matching_checkpoint(cfg, ckpt_path)?;
    let data = load_data(cfg)?;
    let prepared = prepared_for(cfg, cfg.arch, &data)?;
    if prepared.test.is_empty() {
        return Err(Error::argument(format!(
            "test split for {} is empty; not enough bars",
            prepared.ticker
        )));
    }
    let report = evaluate(&ckpt, &prepared.test)?;
    let path = cfg.out.join(format!("report_{}.csv", cfg.arch));
    write_file(&path, &report_csv(std::slice::from_ref(&report)))?;
    print!("{}", report_table(std::slice::from_ref(&report)));
    println!("report: {}", path.display());
    Ok(())
}

fn cmd_forecast(cfg: &RunConfig, ckpt_path: Option<&Path>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ckpt = load_matching_checkpoint(cfg, ckpt_path)?;
    let data = load_data(cfg)?;
    let prepared = prepared_for(cfg, cfg.arch, &data)?;
    let start = prepared.test_start.checked_sub(cfg.window).ok_or_else(|| {
        Error::argument(format!(
            "{} has too few bars before the test split for a {}-step context",
            prepared.ticker, cfg.window
        ))
    })?;
    let forecast =
        rolling_forecast(&ckpt, &prepared.bars[start..], &prepared.sentiment, cfg.horizon)?;
    let path = cfg.out.join(format!("forecast_{}.csv", cfg.arch));
    write_file(&path, &plot::write_forecast_csv(&forecast.rows))?;
    match forecast.rows.as_slice() {
        [] => println!("no test days available to forecast"),
        [first, .., last] => println!(
            "forecast {} days, {} through {}",
            forecast.rows.len(),
            first.date,
            last.date
        ),
        [only] => println!("forecast 1 day, {}", only.date),
    }
    if forecast.truncated {
        println!(
            "horizon {} truncated to {} available actuals",
            cfg.horizon,
            forecast.rows.len()
        );
    }
    println!("forecast: {}", path.display());
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, input: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let header = text.lines().next().unwrap_or("").trim();
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".to_string());
    let (svg, out_path) = match header {
        "epoch,train_loss,val_loss" => (
            plot::loss_curve_svg(&plot::parse_history_csv(&text)?)?,
            cfg.out.join(format!("{stem}_loss.svg")),
        ),
        "date,predicted,actual" => (
            plot::overlay_svg(&plot::parse_forecast_csv(&text)?)?,
            cfg.out.join(format!("{stem}_overlay.svg")),
        ),
        other => {
            return Err(Error::format(
                format!("unrecognized header '{other}'; expected a history or forecast CSV"),
                Some(1),
            ))
        }
    };
    write_file(&out_path, &svg)?;
    println!("plot: {}", out_path.display());
    Ok(())
}

fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = load_data(cfg)?;
    let mut reports = Vec::new();
    for arch in Architecture::ALL {
        let (ckpt, history, prepared) = train_one(cfg, arch, &data)?;
        save_run(cfg, arch, &ckpt, &history)?;
        if prepared.test.is_empty() {
            return Err(Error::argument(format!(
                "test split for {} is empty; not enough bars",
                prepared.ticker
            )));
        }
        reports.push(evaluate(&ckpt, &prepared.test)?);
        println!(
            "{arch}: best epoch {}, validation loss {:.6e}",
            ckpt.epoch, ckpt.validation_loss
        );
    }
    let path = cfg.out.join("comparison.csv");
    write_file(&path, &report_csv(&reports))?;
    print!("{}", report_table(&reports));
    println!("comparison: {}", path.display());
    Ok(())
}
