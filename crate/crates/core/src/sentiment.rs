//! Headline sentiment scoring and per-date aggregation.
//!
//! Headlines are tokenized to a fixed length, scored into three-class logits
//! by a pluggable [`SentimentScorer`], softmaxed into probability
//! distributions, and averaged per (date, ticker). Class order is fixed as
//! (neutral, positive, negative) everywhere; downstream feature positions
//! depend on it.
//!
//! The shipped scorer is a deterministic lexicon accumulator. Any
//! implementation with the same logits contract (three reals per token
//! sequence) can be plugged in without touching the rest of the pipeline.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::numerics::softmax;

/// Reserved padding token. Input tokens are lowercased, so the uppercase
/// sentinel can never collide with real text.
pub const PAD: &str = "PAD";

/// Default fixed token length for headlines.
pub const DEFAULT_MAX_LEN: usize = 32;

/// A headline tokenized to a fixed length, trailing slots filled with [`PAD`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
    pad_count: usize,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn max_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn pad_count(&self) -> usize {
        self.pad_count
    }

    /// The non-PAD prefix.
    pub fn content(&self) -> &[String] {
        &self.tokens[..self.tokens.len() - self.pad_count]
    }
}

/// Lowercases, strips punctuation, splits on whitespace, then truncates or
/// pads to exactly `max_len` tokens. Empty or whitespace-only headlines
/// yield an all-PAD sequence rather than an error; real feeds contain blank
/// titles and dropping them would skew daily counts.
pub fn tokenize_and_pad(headline: &str, max_len: usize) -> Result<TokenSequence> {
    if max_len == 0 {
        return Err(Error::argument("tokenize_and_pad requires max_len >= 1"));
    }
    let cleaned: String = headline
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut tokens: Vec<String> = cleaned
        .split_whitespace()
        .take(max_len)
        .map(str::to_string)
        .collect();
    let pad_count = max_len - tokens.len();
    tokens.resize(max_len, PAD.to_string());
    Ok(TokenSequence { tokens, pad_count })
}

/// Three-class sentiment probability vector in class order
/// (neutral, positive, negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentDistribution {
    pub neutral: f64,
    pub positive: f64,
    pub negative: f64,
}

impl SentimentDistribution {
    /// The no-signal prior: equal mass on all three classes.
    pub fn uniform() -> SentimentDistribution {
        SentimentDistribution { neutral: 1.0 / 3.0, positive: 1.0 / 3.0, negative: 1.0 / 3.0 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.neutral, self.positive, self.negative]
    }

    pub fn from_array(p: [f64; 3]) -> SentimentDistribution {
        SentimentDistribution { neutral: p[0], positive: p[1], negative: p[2] }
    }

    /// Components in [0, 1] and summing to 1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let parts = self.as_array();
        parts.iter().all(|&p| (0.0..=1.0).contains(&p))
            && (parts.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Aggregated sentiment for one (date, ticker) group.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySentiment {
    pub date: NaiveDate,
    pub ticker: String,
    pub distribution: SentimentDistribution,
    pub headline_count: usize,
}

/// Sentiment classes in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SentimentClass {
    Neutral,
    Positive,
    Negative,
}

impl SentimentClass {
    /// Position of this class in logit/probability vectors.
    pub fn index(self) -> usize {
        match self {
            SentimentClass::Neutral => 0,
            SentimentClass::Positive => 1,
            SentimentClass::Negative => 2,
        }
    }

    pub const ALL: [SentimentClass; 3] =
        [SentimentClass::Neutral, SentimentClass::Positive, SentimentClass::Negative];
}

impl fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
            SentimentClass::Negative => "negative",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SentimentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<SentimentClass> {
        match s {
            "neutral" => Ok(SentimentClass::Neutral),
            "positive" => Ok(SentimentClass::Positive),
            "negative" => Ok(SentimentClass::Negative),
            other => Err(Error::argument(format!("unknown sentiment class '{other}'"))),
        }
    }
}

/// Anything that maps a token sequence to three class logits in order
/// (neutral, positive, negative). Implementations must be safe for
/// concurrent read-only use; headline scoring is embarrassingly parallel.
pub trait SentimentScorer: Sync {
    fn logits(&self, tokens: &TokenSequence) -> Result<[f64; 3]>;
}

/// Word -> (class, weight) table loaded from the lexicon file format.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, (SentimentClass, f64)>,
}

impl Lexicon {
    /// Parses lexicon text: one `word<TAB>class<TAB>weight` entry per line,
    /// `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Lexicon> {
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (word, class, weight) = match (fields.next(), fields.next(), fields.next()) {
                (Some(w), Some(c), Some(v)) if fields.next().is_none() => (w, c, v),
                _ => {
                    return Err(Error::format(
                        format!("expected word<TAB>class<TAB>weight, got '{line}'"),
                        Some(line_no),
                    ))
                }
            };
            let class: SentimentClass = class
                .parse()
                .map_err(|_| Error::format(format!("unknown class '{class}'"), Some(line_no)))?;
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::format(format!("bad weight '{weight}'"), Some(line_no)))?;
            entries.insert(word.to_lowercase(), (class, weight));
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text)
    }

    /// The starter financial lexicon shipped with the repository.
    pub fn starter() -> Lexicon {
        let text = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lexicon.tsv"));
        Lexicon::parse(text).expect("bundled lexicon is well-formed")
    }

    pub fn get(&self, word: &str) -> Option<(SentimentClass, f64)> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Words of one class, sorted so callers iterate deterministically.
    pub fn words_of(&self, class: SentimentClass) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .entries
            .iter()
            .filter(|(_, (c, _))| *c == class)
            .map(|(w, _)| w.as_str())
            .collect();
        words.sort_unstable();
        words
    }

    /// Every known word, sorted.
    pub fn all_words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}

/// Accumulates per-class lexicon weights over the non-PAD tokens. Unknown
/// tokens contribute nothing, so an unmatched headline scores as all-zero
/// logits (the uniform distribution after softmax).
pub fn lexicon_score(tokens: &TokenSequence, lexicon: &Lexicon) -> [f64; 3] {
    let mut logits = [0.0f64; 3];
    for token in tokens.content() {
        if let Some((class, weight)) = lexicon.get(token) {
            logits[class.index()] += weight;
        }
    }
    logits
}

/// Deterministic lexicon-backed scorer.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: Lexicon,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon) -> LexiconScorer {
        LexiconScorer { lexicon }
    }

    pub fn starter() -> LexiconScorer {
        LexiconScorer::new(Lexicon::starter())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl SentimentScorer for LexiconScorer {
    fn logits(&self, tokens: &TokenSequence) -> Result<[f64; 3]> {
        Ok(lexicon_score(tokens, &self.lexicon))
    }
}

/// Scores one tokenized headline: scorer logits passed through softmax.
pub fn score_headline(
    tokens: &TokenSequence,
    scorer: &dyn SentimentScorer,
) -> Result<SentimentDistribution> {
    let logits = scorer.logits(tokens).map_err(|e| {
        Error::Scorer(format!("{e} (headline: '{}')", tokens.content().join(" ")))
    })?;
    let p = softmax(&logits)?;
    Ok(SentimentDistribution { neutral: p[0], positive: p[1], negative: p[2] })
}

/// Groups scored headlines by (date, ticker) and takes the component-wise
/// arithmetic mean of the probability distributions (probabilities are
/// averaged, not logits). Output is sorted by (ticker, date).
pub fn aggregate_daily(
    scored: &[(NaiveDate, String, SentimentDistribution)],
) -> Vec<DailySentiment> {
    use std::collections::BTreeMap;

    let mut groups: BTreeMap<(String, NaiveDate), ([f64; 3], usize)> = BTreeMap::new();
    for (date, ticker, dist) in scored {
        let entry = groups.entry((ticker.clone(), *date)).or_insert(([0.0; 3], 0));
        for (acc, p) in entry.0.iter_mut().zip(dist.as_array()) {
            *acc += p;
        }
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|((ticker, date), (sums, count))| DailySentiment {
            date,
            ticker,
            distribution: SentimentDistribution::from_array([
                sums[0] / count as f64,
                sums[1] / count as f64,
                sums[2] / count as f64,
            ]),
            headline_count: count,
        })
        .collect()
}
