//! Daily OHLCV bars: validation, CSV ingestion and synthetic generation.

use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Column order of the per-ticker CSV files.
pub const CSV_HEADER: [&str; 7] = ["date", "open", "high", "low", "close", "adj_close", "volume"];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: f64,
}

impl OhlcvBar {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidBar {
                date: self.date,
                reason,
            })
        };
        let prices = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("adj_close", self.adj_close),
        ];
        for (name, p) in prices {
            if !(p.is_finite() && p > 0.0) {
                return fail(format!("{name} must be a positive finite price, got {p}"));
            }
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return fail(format!("volume must be non-negative, got {}", self.volume));
        }
        if self.high < self.low {
            return fail(format!("high {} is below low {}", self.high, self.low));
        }
        if self.low > self.open.min(self.close) {
            return fail(format!(
                "low {} is above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        if self.high < self.open.max(self.close) {
            return fail(format!(
                "high {} is below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        Ok(())
    }
}

/// An ordered, validated sequence of bars for one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    ticker: String,
    bars: Vec<OhlcvBar>,
}

impl PriceSeries {
    /// Validates every bar, sorts by date and rejects duplicate dates.
    pub fn new(ticker: impl Into<String>, mut bars: Vec<OhlcvBar>) -> Result<Self> {
        let ticker = ticker.into();
        if bars.is_empty() {
            return Err(Error::EmptySeries { ticker });
        }
        for bar in &bars {
            bar.validate()?;
        }
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateDate { date: w[0].date });
        }
        Ok(Self { ticker, bars })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn adj_closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.adj_close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    /// Index of the bar dated `date`, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }

    /// A copy of this series with bars after `index` replaced by `f(bar)`.
    /// Used to probe for look-ahead.
    pub fn with_future_mutated(&self, index: usize, f: impl Fn(&OhlcvBar) -> OhlcvBar) -> Result<Self> {
        let bars = self
            .bars
            .iter()
            .enumerate()
            .map(|(i, b)| if i > index { f(b) } else { *b })
            .collect();
        Self::new(self.ticker.clone(), bars)
    }
}

/// Reads a `<TICKER>.csv` file. The ticker is taken from the file stem.
pub fn parse_csv_series(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let ticker = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no ticker stem", path.display())))?
        .to_string();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv_bytes(&ticker, &data, path)
}

fn parse_csv_bytes(ticker: &str, data: &[u8], path: &Path) -> Result<PriceSeries> {
    let malformed = |line: u64, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(data);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(malformed(
            1,
            format!(
                "expected header `{}`, got `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CSV_HEADER.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT)
            .map_err(|e| malformed(line, format!("bad date `{}`: {e}", &record[0])))?;
        let mut nums = [0.0f64; 6];
        for (k, slot) in nums.iter_mut().enumerate() {
            let field = &record[k + 1];
            *slot = field
                .parse()
                .map_err(|_| malformed(line, format!("bad {} value `{field}`", CSV_HEADER[k + 1])))?;
        }
        let [open, high, low, close, adj_close, volume] = nums;
        bars.push(OhlcvBar {
            date,
            open,
            high,
            low,
            close,
            adj_close,
            volume,
        });
    }
    PriceSeries::new(ticker, bars)
}

pub fn write_csv_series(series: &PriceSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CSV_HEADER)?;
    for b in series.bars() {
        writer.write_record([
            b.date.format(DATE_FORMAT).to_string(),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.adj_close.to_string(),
            b.volume.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Loads every `*.csv` in `dir`, ordered by ticker.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<PriceSeries>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(parse_csv_series).collect()
}

/// Geometric random walk with an overnight gap, intraday wicks and a
/// log-normal volume process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticModel {
    /// Expected daily log-return.
    pub drift: f64,
    /// Daily log-return standard deviation.
    pub volatility: f64,
    pub start_price: f64,
    /// Overnight gap σ as a fraction of `volatility`.
    pub gap_fraction: f64,
    /// Scale of the high/low extension beyond the body, as a fraction of price.
    pub spread: f64,
    pub base_volume: f64,
    /// σ of log-volume.
    pub volume_sigma: f64,
    pub start_date: NaiveDate,
}

impl Default for SyntheticModel {
    fn default() -> Self {
        Self {
            drift: 5e-4,
            volatility: 0.02,
            start_price: 100.0,
            gap_fraction: 0.3,
            spread: 0.005,
            base_volume: 1e6,
            volume_sigma: 0.4,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
        }
    }
}

impl SyntheticModel {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return bad("start price must be positive");
        }
        if !(self.volatility.is_finite() && self.volatility >= 0.0) {
            return bad("volatility must be non-negative");
        }
        if !self.drift.is_finite() {
            return bad("drift must be finite");
        }
        if !(self.spread >= 0.0 && self.gap_fraction >= 0.0 && self.volume_sigma >= 0.0) {
            return bad("spread, gap fraction and volume sigma must be non-negative");
        }
        if self.base_volume.is_nan() || self.base_volume < 0.0 {
            return bad("base volume must be non-negative");
        }
        Ok(())
    }
}

fn next_trading_day(date: NaiveDate) -> NaiveDate {
    let mut d = date + Duration::days(1);
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d += Duration::days(1);
    }
    d
}

/// Generates `n_days` trading days. A pure function of its arguments.
///
/// Close follows `c[t] = c[t-1]·exp(drift − σ²/2 + σ·Z)`; the open gaps away
/// from the previous close by `gap_fraction·σ·Z'`; high and low extend the
/// body by `spread·|N(0,1)|` on each side, so bar invariants hold by
/// construction.
pub fn generate_synthetic_series(
    ticker: &str,
    seed: u64,
    n_days: usize,
    model: &SyntheticModel,
) -> Result<PriceSeries> {
    model.validate()?;
    if n_days == 0 {
        return Err(Error::InvalidParameter("n_days must be at least 1".into()));
    }
    let mut rng = seed::stream(seed, ticker);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let sigma = model.volatility;
    let mu = model.drift - 0.5 * sigma * sigma;
    let mut date = model.start_date;
    while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
        date = next_trading_day(date);
    }

    let mut prev_close = model.start_price;
    let mut bars = Vec::with_capacity(n_days);
    for _ in 0..n_days {
        let z_close = normal();
        let z_gap = normal();
        let z_up = normal();
        let z_down = normal();
        let z_vol = normal();

        let close = prev_close * (mu + sigma * z_close).exp();
        let open = prev_close * (model.gap_fraction * sigma * z_gap).exp();
        let up = model.spread * z_up.abs();
        let down = (model.spread * z_down.abs()).min(0.5);
        let high = open.max(close) * (1.0 + up);
        let low = open.min(close) * (1.0 - down);
        let volume =
            model.base_volume * (model.volume_sigma * z_vol).exp() * (1.0 + 10.0 * (close / prev_close).ln().abs());

        bars.push(OhlcvBar {
            date,
            open,
            high,
            low,
            close,
            adj_close: close,
            volume,
        });
        prev_close = close;
        date = next_trading_day(date);
    }
    PriceSeries::new(ticker, bars)
}

/// Ticker names used for synthetic corpora: `SYN000`, `SYN001`, ...
pub fn synthetic_ticker(i: usize) -> String {
    format!("SYN{i:03}")
}

/// A corpus of `n_tickers` synthetic series sharing one model.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_tickers: usize,
    n_days: usize,
    model: &SyntheticModel,
) -> Result<Vec<PriceSeries>> {
    (0..n_tickers)
        .map(|i| generate_synthetic_series(&synthetic_ticker(i), seed, n_days, model))
        .collect()
}
