//! News/price CSV ingestion, per-ticker chronological splits, min-max
//! normalization, and 8-step window construction.
//!
//! CSV contracts:
//! - news:   header `date,ticker,title,publisher,url`
//! - prices: header `date,ticker,open,high,low,close,volume`
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`), files UTF-8 with RFC-4180 quoting.
//! Invalid rows are collected into a rejects report (line number + reason)
//! rather than silently dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::sentiment::{DailySentiment, SentimentDistribution};

/// Prediction window length: each sample sees this many trading days.
pub const WINDOW: usize = 8;

/// One news headline row.
#[derive(Debug, Clone, PartialEq)]
pub struct NewsRecord {
    pub date: NaiveDate,
    pub ticker: String,
    pub title: String,
    pub publisher: String,
    pub url: String,
}

/// One trading day's bar for one ticker. `close` drives the pipeline; the
/// remaining OHLCV fields are carried through untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub ticker: String,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

/// A row that failed validation, with the 1-based source line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub row_number: u64,
    pub reason: String,
}

/// Loaded rows plus the rejects report.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(file))
}

/// Maps required column names to their indices, erroring on the first
/// missing column by name.
fn header_indices(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    required: &[&str],
) -> Result<Vec<usize>> {
    let headers = reader
        .headers()
        .map_err(|e| Error::format(format!("{path:?}: cannot read header: {e}"), Some(1)))?
        .clone();
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| {
                    Error::format(format!("{path:?}: missing required column '{name}'"), Some(1))
                })
        })
        .collect()
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Loads the news CSV. Rows with unparseable dates or empty tickers become
/// rejects; the file itself must exist and carry the full header.
pub fn load_news(path: impl AsRef<Path>) -> Result<Loaded<NewsRecord>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let idx = header_indices(&mut reader, path, &["date", "ticker", "title", "publisher", "url"])?;

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(Reject {
                    row_number: e.position().map(|p| p.line()).unwrap_or(0),
                    reason: "malformed row".to_string(),
                });
                continue;
            }
        };
        let line = record_line(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();

        let date = match field(0).parse::<NaiveDate>() {
            Ok(d) => d,
            Err(_) => {
                rejects.push(Reject { row_number: line, reason: "bad date".to_string() });
                continue;
            }
        };
        let ticker = field(1).to_string();
        if ticker.is_empty() {
            rejects.push(Reject { row_number: line, reason: "empty ticker".to_string() });
            continue;
        }
        records.push(NewsRecord {
            date,
            ticker,
            title: field(2).to_string(),
            publisher: field(3).to_string(),
            url: field(4).to_string(),
        });
    }
    Ok(Loaded { records, rejects })
}

/// Loads the price CSV, sorted by (ticker, date). Rows with bad dates,
/// unparseable numerics, or non-positive closes become rejects; duplicate
/// (date, ticker) pairs make the close ambiguous and fail the whole load.
pub fn load_prices(path: impl AsRef<Path>) -> Result<Loaded<PriceBar>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let idx = header_indices(
        &mut reader,
        path,
        &["date", "ticker", "open", "high", "low", "close", "volume"],
    )?;

    let mut records: Vec<PriceBar> = Vec::new();
    let mut rejects = Vec::new();
    let mut seen: BTreeSet<(String, NaiveDate)> = BTreeSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(Reject {
                    row_number: e.position().map(|p| p.line()).unwrap_or(0),
                    reason: "malformed row".to_string(),
                });
                continue;
            }
        };
        let line = record_line(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();

        let date = match field(0).parse::<NaiveDate>() {
            Ok(d) => d,
            Err(_) => {
                rejects.push(Reject { row_number: line, reason: "bad date".to_string() });
                continue;
            }
        };
        let ticker = field(1).to_string();
        if ticker.is_empty() {
            rejects.push(Reject { row_number: line, reason: "empty ticker".to_string() });
            continue;
        }

        let mut numeric = [0.0f64; 5];
        let mut bad: Option<&str> = None;
        for (k, name) in ["open", "high", "low", "close", "volume"].iter().enumerate() {
            match field(2 + k).parse::<f64>() {
                Ok(v) if v.is_finite() => numeric[k] = v,
                _ => {
                    bad = Some(name);
                    break;
                }
            }
        }
        if let Some(name) = bad {
            rejects.push(Reject { row_number: line, reason: format!("bad {name}") });
            continue;
        }
        let close = numeric[3];
        if close <= 0.0 {
            rejects.push(Reject { row_number: line, reason: "non-positive close".to_string() });
            continue;
        }
        if !seen.insert((ticker.clone(), date)) {
            return Err(Error::format(
                format!("duplicate (date, ticker) row for {ticker} on {date}: close is ambiguous"),
                Some(line as usize),
            ));
        }
        records.push(PriceBar {
            date,
            ticker,
            open: numeric[0],
            high: numeric[1],
            low: numeric[2],
            close,
            volume: numeric[4],
        });
    }
    records.sort_by(|a, b| (a.ticker.as_str(), a.date).cmp(&(b.ticker.as_str(), b.date)));
    Ok(Loaded { records, rejects })
}

/// Writes a rejects report CSV (`row_number,reason`).
pub fn write_rejects(path: impl AsRef<Path>, rejects: &[Reject]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("row_number,reason\n");
    for r in rejects {
        out.push_str(&format!("{},{}\n", r.row_number, r.reason));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Groups records per ticker, preserving (and relying on) date order.
pub fn group_by_ticker(bars: Vec<PriceBar>) -> BTreeMap<String, Vec<PriceBar>> {
    let mut map: BTreeMap<String, Vec<PriceBar>> = BTreeMap::new();
    for bar in bars {
        map.entry(bar.ticker.clone()).or_default().push(bar);
    }
    map
}

/// Split fractions. Defaults give 85% train+validation / 15% test per
/// ticker, then 85% train / 15% validation within the first block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction_of_train: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.85, val_fraction_of_train: 0.15 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train_fraction", self.train_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(0.0 < v && v < 1.0) {
                return Err(Error::argument(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        Ok(())
    }

    /// (train, validation, test) counts for one ticker of `n` records.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let head = (self.train_fraction * n as f64).floor() as usize;
        let train = ((1.0 - self.val_fraction_of_train) * head as f64).floor() as usize;
        (train, head - train, n - head)
    }
}

/// Minimum records a ticker needs to survive the split: one window plus a
/// target must be formable across splits.
pub const MIN_RECORDS_PER_TICKER: usize = 10;

/// Per-ticker chronological split result.
#[derive(Debug, Clone)]
pub struct SplitResult<T> {
    pub train: BTreeMap<String, Vec<T>>,
    pub validation: BTreeMap<String, Vec<T>>,
    pub test: BTreeMap<String, Vec<T>>,
    /// Tickers excluded for having fewer than [`MIN_RECORDS_PER_TICKER`]
    /// records, with their record counts.
    pub excluded: Vec<(String, usize)>,
}

impl<T> SplitResult<T> {
    pub fn totals(&self) -> (usize, usize, usize) {
        let sum = |m: &BTreeMap<String, Vec<T>>| m.values().map(Vec::len).sum();
        (sum(&self.train), sum(&self.validation), sum(&self.test))
    }
}

/// Splits each ticker's chronologically sorted records: the first
/// `train_fraction` go to train+validation and the remainder to test, then
/// the first `1 - val_fraction_of_train` of that block to train. Splits are
/// chronological, never random: shuffling a time series would leak future
/// prices into training.
pub fn stratified_split<T: Clone>(
    by_ticker: &BTreeMap<String, Vec<T>>,
    spec: &SplitSpec,
) -> Result<SplitResult<T>> {
    spec.validate()?;
    let mut result = SplitResult {
        train: BTreeMap::new(),
        validation: BTreeMap::new(),
        test: BTreeMap::new(),
        excluded: Vec::new(),
    };
    for (ticker, records) in by_ticker {
        let n = records.len();
        if n < MIN_RECORDS_PER_TICKER {
            result.excluded.push((ticker.clone(), n));
            continue;
        }
        let (train, val, _test) = spec.counts(n);
        result.train.insert(ticker.clone(), records[..train].to_vec());
        result.validation.insert(ticker.clone(), records[train..train + val].to_vec());
        result.test.insert(ticker.clone(), records[train + val..].to_vec());
    }
    Ok(result)
}

/// Min-max scaler fitted on the training split only; applying it to later
/// splits may legitimately map outside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }
}

/// Fits a scaler to the observed min/max of `values`.
pub fn fit_minmax(values: &[f64]) -> Result<MinMaxScaler> {
    if values.len() < 2 {
        return Err(Error::argument(format!(
            "fit_minmax needs at least 2 values, got {}",
            values.len()
        )));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateSeries(format!(
            "constant series (min == max == {min}); cannot map to (0,1)"
        )));
    }
    Ok(MinMaxScaler { min, max })
}

/// One supervised example: an 8-step input block and the next day's
/// normalized close.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// Shape (WINDOW, F): F == 4 fused (3 sentiment + close), F == 1 price-only.
    pub inputs: Tensor,
    pub target: f64,
    pub ticker: String,
    pub target_date: NaiveDate,
}

/// A normalized close with its trading date, the unit `build_windows`
/// consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedBar {
    pub date: NaiveDate,
    pub close: f64,
}

/// Per-ticker sentiment lookup keyed by trading date.
pub type SentimentLookup = BTreeMap<NaiveDate, SentimentDistribution>;

/// Builds supervised windows over an already-normalized close series.
///
/// For each target index `t` in `window..n`, the inputs are steps
/// `t-window..t` and the target is step `t`'s close. In fused mode the
/// aggregated sentiment of the most recent input day (step `t-1`) is copied
/// into feature positions 0-2 of every time step (the latest news available
/// before the prediction), falling back to the uniform distribution when
/// that day has none; the close sits at position 3. Price-only mode emits a
/// single close feature per step.
pub fn build_windows(
    ticker: &str,
    bars: &[NormalizedBar],
    sentiment: Option<&SentimentLookup>,
    window: usize,
    fused: bool,
) -> Vec<WindowSample> {
    let n = bars.len();
    if n < window + 1 {
        return Vec::new();
    }
    let features = if fused { 4 } else { 1 };
    let mut samples = Vec::with_capacity(n - window);
    for t in window..n {
        let mut data = Vec::with_capacity(window * features);
        let context = if fused {
            let last_input_day = bars[t - 1].date;
            Some(
                sentiment
                    .and_then(|lookup| lookup.get(&last_input_day).copied())
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
        samples.push(WindowSample {
            inputs: Tensor::from_vec(&[window, features], data).expect("window shape"),
            target: bars[t].close,
            ticker: ticker.to_string(),
            target_date: bars[t].date,
        });
    }
    samples
}

/// Rolls aggregated per-date sentiment onto the trading calendar: news dated
/// on a non-trading day counts toward the next trading day, weighted by
/// headline count; news after the final trading day is dropped.
pub fn align_sentiment_to_trading_days(
    daily: &[DailySentiment],
    trading_days: &BTreeSet<NaiveDate>,
) -> SentimentLookup {
    let mut sums: BTreeMap<NaiveDate, ([f64; 3], usize)> = BTreeMap::new();
    for d in daily {
        let Some(&day) = trading_days.range(d.date..).next() else {
            continue;
        };
        let entry = sums.entry(day).or_insert(([0.0; 3], 0));
        for (acc, p) in entry.0.iter_mut().zip(d.distribution.as_array()) {
            *acc += p * d.headline_count as f64;
        }
        entry.1 += d.headline_count;
    }
    sums.into_iter()
        .map(|(day, (acc, count))| {
            let n = count as f64;
            (day, SentimentDistribution::from_array([acc[0] / n, acc[1] / n, acc[2] / n]))
        })
        .collect()
}

/// Fully prepared single-ticker dataset: normalized bars, split windows, and
/// the scaler fitted on the training block.
#[derive(Debug, Clone)]
pub struct PreparedTicker {
    pub ticker: String,
    pub scaler: MinMaxScaler,
    pub bars: Vec<NormalizedBar>,
    pub raw_closes: Vec<f64>,
    pub train: Vec<WindowSample>,
    pub validation: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
    /// Index of the first test bar within `bars`.
    pub test_start: usize,
    pub sentiment: SentimentLookup,
}

/// Splits one ticker's bars, fits the scaler on the training block, and
/// builds windows over the whole normalized series. Each window belongs to
/// the split containing its TARGET date; inputs may reach back into earlier
/// splits, which is exactly the information available in walk-forward use.
pub fn prepare_ticker(
    ticker: &str,
    bars: &[PriceBar],
    daily_sentiment: &[DailySentiment],
    spec: &SplitSpec,
    window: usize,
    fused: bool,
) -> Result<PreparedTicker> {
    spec.validate()?;
    if bars.len() < MIN_RECORDS_PER_TICKER {
        return Err(Error::argument(format!(
            "ticker {ticker} has {} bars; at least {MIN_RECORDS_PER_TICKER} required",
            bars.len()
        )));
    }
    let n = bars.len();
    let (train_count, val_count, _) = spec.counts(n);
    let head = train_count + val_count;

    let raw_closes: Vec<f64> = bars.iter().map(|b| b.close).collect();
    let scaler = fit_minmax(&raw_closes[..train_count])?;
    let normalized: Vec<NormalizedBar> = bars
        .iter()
        .map(|b| NormalizedBar { date: b.date, close: scaler.normalize(b.close) })
        .collect();

    let trading_days: BTreeSet<NaiveDate> = bars.iter().map(|b| b.date).collect();
    let for_ticker: Vec<DailySentiment> =
        daily_sentiment.iter().filter(|d| d.ticker == ticker).cloned().collect();
    let sentiment = align_sentiment_to_trading_days(&for_ticker, &trading_days);

    let all = build_windows(ticker, &normalized, Some(&sentiment).filter(|_| fused), window, fused);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for sample in all {
        // Window k (built in order) targets bar index window + k.
        let t = window + train.len() + validation.len() + test.len();
        debug_assert_eq!(bars[t].date, sample.target_date);
        if t < train_count {
            train.push(sample);
        } else if t < head {
            validation.push(sample);
        } else {
            test.push(sample);
        }
    }
    Ok(PreparedTicker {
        ticker: ticker.to_string(),
        scaler,
        bars: normalized,
        raw_closes,
        train,
        validation,
        test,
        test_start: head,
        sentiment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_news_well_formed() {
        let f = write_temp(
            "date,ticker,title,publisher,url\n\
             2020-01-02,EBAY,Profits soar,Wire,http://a\n\
             2020-01-03,EBAY,\"Growth, again\",Wire,http://b\n\
             2020-01-04,MSFT,Flat day,Desk,http://c\n",
        );
        let loaded = load_news(f.path()).unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert!(loaded.rejects.is_empty());
        assert_eq!(loaded.records[1].title, "Growth, again");
    }

    #[test]
    fn load_news_rejects_bad_date() {
        let f = write_temp(
            "date,ticker,title,publisher,url\n\
             not-a-date,EBAY,Title,Wire,http://a\n\
             2020-01-03,EBAY,Fine,Wire,http://b\n",
        );
        let loaded = load_news(f.path()).unwrap();
        assert_eq!(loaded.records.len(), 1);
        assert_eq!(loaded.rejects.len(), 1);
        assert_eq!(loaded.rejects[0].reason, "bad date");
        assert_eq!(loaded.rejects[0].row_number, 2);
    }

    #[test]
    fn load_news_header_only_is_empty() {
        let f = write_temp("date,ticker,title,publisher,url\n");
        let loaded = load_news(f.path()).unwrap();
        assert!(loaded.records.is_empty());
        assert!(loaded.rejects.is_empty());
    }

    #[test]
    fn load_news_missing_column_names_it() {
        let f = write_temp("date,ticker,headline,publisher,url\n");
        let err = load_news(f.path()).unwrap_err();
        match err {
            Error::Format { message, .. } => assert!(message.contains("'title'"), "{message}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn load_news_missing_file_is_io_error() {
        assert!(matches!(load_news("/nonexistent/news.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn load_prices_sorts_and_rejects() {
        let f = write_temp(
            "date,ticker,open,high,low,close,volume\n\
             2020-01-03,EBAY,1,2,0.5,1.5,100\n\
             2020-01-02,EBAY,1,2,0.5,1.2,100\n\
             2020-01-04,EBAY,1,2,0.5,0,100\n\
             2020-01-05,EBAY,1,2,0.5,oops,100\n",
        );
        let loaded = load_prices(f.path()).unwrap();
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.records[0].date, date("2020-01-02"));
        assert_eq!(loaded.records[1].date, date("2020-01-03"));
        let reasons: Vec<&str> = loaded.rejects.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(reasons, vec!["non-positive close", "bad close"]);
    }

    #[test]
    fn load_prices_duplicate_day_is_format_error() {
        let f = write_temp(
            "date,ticker,open,high,low,close,volume\n\
             2020-01-02,EBAY,1,2,0.5,1.5,100\n\
             2020-01-02,EBAY,1,2,0.5,1.6,100\n",
        );
        assert!(matches!(load_prices(f.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn split_counts_match_floor_arithmetic() {
        let spec = SplitSpec::default();
        assert_eq!(spec.counts(100), (72, 13, 15));
    }

    #[test]
    fn split_excludes_thin_tickers() {
        let mut by_ticker = BTreeMap::new();
        by_ticker.insert("OK".to_string(), (0..100).collect::<Vec<u32>>());
        by_ticker.insert("THIN".to_string(), (0..9).collect::<Vec<u32>>());
        let result = stratified_split(&by_ticker, &SplitSpec::default()).unwrap();
        assert_eq!(result.excluded, vec![("THIN".to_string(), 9)]);
        let (train, val, test) = result.totals();
        assert_eq!((train, val, test), (72, 13, 15));
        // Chronology preserved: head of the sequence trains, tail tests.
        assert_eq!(result.train["OK"][0], 0);
        assert_eq!(result.test["OK"].last(), Some(&99));
    }

    #[test]
    fn split_has_no_overlap_and_full_coverage() {
        let mut by_ticker = BTreeMap::new();
        by_ticker.insert("T".to_string(), (0..53).collect::<Vec<u32>>());
        let r = stratified_split(&by_ticker, &SplitSpec::default()).unwrap();
        let mut all: Vec<u32> = r.train["T"]
            .iter()
            .chain(r.validation["T"].iter())
            .chain(r.test["T"].iter())
            .cloned()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<u32>>());
        // Chronological: max(train) < min(val) < min(test).
        assert!(r.train["T"].last() < r.validation["T"].first());
        assert!(r.validation["T"].last() < r.test["T"].first());
    }

    #[test]
    fn minmax_basics() {
        let scaler = fit_minmax(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(scaler.min, 10.0);
        assert_eq!(scaler.max, 30.0);
        assert_eq!(scaler.normalize(20.0), 0.5);
        assert_eq!(scaler.normalize(10.0), 0.0);
        assert_eq!(scaler.normalize(30.0), 1.0);
        assert_eq!(scaler.denormalize(0.5), 20.0);
    }

    #[test]
    fn minmax_rejects_degenerate_inputs() {
        assert!(matches!(fit_minmax(&[5.0, 5.0, 5.0]), Err(Error::DegenerateSeries(_))));
        assert!(matches!(fit_minmax(&[5.0]), Err(Error::Argument(_))));
    }

    fn bars_from_closes(closes: &[f64]) -> Vec<NormalizedBar> {
        closes
            .iter()
            .enumerate()
            .map(|(i, &close)| NormalizedBar {
                date: date("2020-01-01") + chrono::Days::new(i as u64),
                close,
            })
            .collect()
    }

    #[test]
    fn windows_count_is_n_minus_window() {
        let bars = bars_from_closes(&(1..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
        let samples = build_windows("T", &bars, None, WINDOW, false);
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].target, bars[8].close);
        assert_eq!(samples[1].target, bars[9].close);
        assert_eq!(samples[0].inputs.shape(), &[8, 1]);
    }

    #[test]
    fn windows_need_a_target_day() {
        let bars = bars_from_closes(&[0.1; 8]);
        assert!(build_windows("T", &bars, None, WINDOW, false).is_empty());
    }

    #[test]
    fn fused_layout_repeats_sentiment_across_steps() {
        let closes: Vec<f64> = (1..=12).map(|i| i as f64 / 12.0).collect();
        let bars = bars_from_closes(&closes);
        let mut lookup = SentimentLookup::new();
        let dist = SentimentDistribution::from_array([0.2, 0.7, 0.1]);
        for bar in &bars {
            lookup.insert(bar.date, dist);
        }
        let samples = build_windows("T", &bars, Some(&lookup), WINDOW, true);
        assert_eq!(samples.len(), 4);
        for sample in &samples {
            assert_eq!(sample.inputs.shape(), &[8, 4]);
            for step in 0..8 {
                assert_eq!(sample.inputs.at2(step, 0), 0.2);
                assert_eq!(sample.inputs.at2(step, 1), 0.7);
                assert_eq!(sample.inputs.at2(step, 2), 0.1);
            }
        }
        // Position 3 carries the close of each step.
        assert_eq!(samples[0].inputs.at2(0, 3), closes[0]);
        assert_eq!(samples[0].inputs.at2(7, 3), closes[7]);
    }

    #[test]
    fn fused_without_news_falls_back_to_uniform() {
        let bars = bars_from_closes(&(1..=9).map(|i| i as f64 / 9.0).collect::<Vec<_>>());
        let lookup = SentimentLookup::new();
        let samples = build_windows("T", &bars, Some(&lookup), WINDOW, true);
        assert_eq!(samples.len(), 1);
        for k in 0..3 {
            assert!((samples[0].inputs.at2(0, k) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sentiment_rolls_forward_to_next_trading_day() {
        // Fri 2020-01-03 and Mon 2020-01-06 trade; Sat/Sun news lands on Monday.
        let trading: BTreeSet<NaiveDate> = [date("2020-01-03"), date("2020-01-06")].into();
        let daily = vec![
            DailySentiment {
                date: date("2020-01-04"),
                ticker: "T".into(),
                distribution: SentimentDistribution::from_array([1.0, 0.0, 0.0]),
                headline_count: 1,
            },
            DailySentiment {
                date: date("2020-01-05"),
                ticker: "T".into(),
                distribution: SentimentDistribution::from_array([0.0, 1.0, 0.0]),
                headline_count: 3,
            },
            DailySentiment {
                date: date("2020-01-07"),
                ticker: "T".into(),
                distribution: SentimentDistribution::uniform(),
                headline_count: 5,
            },
        ];
        let lookup = align_sentiment_to_trading_days(&daily, &trading);
        assert_eq!(lookup.len(), 1);
        let monday = lookup[&date("2020-01-06")];
        // Count-weighted mean: (1*(1,0,0) + 3*(0,1,0)) / 4.
        assert!((monday.neutral - 0.25).abs() < 1e-12);
        assert!((monday.positive - 0.75).abs() < 1e-12);
        assert_eq!(monday.negative, 0.0);
    }

    #[test]
    fn prepare_ticker_partitions_by_target_date() {
        let bars: Vec<PriceBar> = (0..40)
            .map(|i| PriceBar {
                date: date("2020-01-01") + chrono::Days::new(i),
                ticker: "T".into(),
                open: 0.0,
                high: 0.0,
                low: 0.0,
                close: 100.0 + i as f64,
                volume: 0.0,
            })
            .collect();
        let prepared =
            prepare_ticker("T", &bars, &[], &SplitSpec::default(), WINDOW, false).unwrap();
        let (train_count, val_count, _) = SplitSpec::default().counts(40);
        assert_eq!(prepared.train.len(), train_count - WINDOW);
        assert_eq!(prepared.validation.len(), val_count);
        assert_eq!(prepared.test.len(), 40 - train_count - val_count);
        assert_eq!(prepared.train.len() + prepared.validation.len() + prepared.test.len(), 32);
        // Scaler fitted on the training block only.
        assert_eq!(prepared.scaler.min, 100.0);
        assert_eq!(prepared.scaler.max, 100.0 + (train_count - 1) as f64);
        // No leakage: split boundaries are chronological.
        let max_train = prepared.train.iter().map(|s| s.target_date).max().unwrap();
        let min_val = prepared.validation.iter().map(|s| s.target_date).min().unwrap();
        let min_test = prepared.test.iter().map(|s| s.target_date).min().unwrap();
        assert!(max_train < min_val);
        assert!(min_val < min_test);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_round_trips(
                values in proptest::collection::vec(1.0..1000.0f64, 2..50),
                probes in proptest::collection::vec(1.0..1000.0f64, 1..100),
            ) {
                prop_assume!(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    > values.iter().cloned().fold(f64::INFINITY, f64::min));
                let scaler = fit_minmax(&values).unwrap();
                for &x in &probes {
                    let back = scaler.denormalize(scaler.normalize(x));
                    prop_assert!((back - x).abs() < 1e-12);
                }
            }

            #[test]
            fn window_count_matches_enumeration_oracle(n in 0usize..40) {
                let closes: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) / (n as f64 + 1.0)).collect();
                let bars = bars_from_closes(&closes);
                let samples = build_windows("T", &bars, None, WINDOW, false);

                // Brute-force enumeration of valid (window, target) pairs.
                let mut expected = 0;
                for t in 0..n {
                    if t >= WINDOW {
                        expected += 1;
                    }
                }
                prop_assert_eq!(samples.len(), expected);
            }

            #[test]
            fn split_totals_preserve_counts(
                sizes in proptest::collection::vec(0usize..400, 1..12),
            ) {
                let by_ticker: BTreeMap<String, Vec<usize>> = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| (format!("T{i}"), (0..n).collect()))
                    .collect();
                let r = stratified_split(&by_ticker, &SplitSpec::default()).unwrap();
                let included: usize = sizes.iter().filter(|&&n| n >= MIN_RECORDS_PER_TICKER).sum();
                let (train, val, test) = r.totals();
                prop_assert_eq!(train + val + test, included);
                // Per-ticker counts stay within one record of the requested fractions.
                for (ticker, records) in &by_ticker {
                    if records.len() < MIN_RECORDS_PER_TICKER {
                        continue;
                    }
                    let n = records.len() as f64;
                    let head = r.train[ticker].len() + r.validation[ticker].len();
                    prop_assert!((head as f64 - 0.85 * n).abs() <= 1.0);
                    prop_assert!(
                        (r.train[ticker].len() as f64 - 0.85 * head as f64).abs() <= 1.0
                    );
                }
            }
        }
    }
}
