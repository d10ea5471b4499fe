//! Buy-signal detection and balanced window sampling.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use log::warn;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{self, IndicatorSeries, Threshold};
use crate::market::{OhlcvBar, PriceSeries};
use crate::raster::RenderStyle;
use crate::seed;

/// RSI level whose upward crossing is a buy trigger.
pub const RSI_OVERSOLD: f64 = 30.0;
/// Window length forced on every rule by the fixed-window ablation.
pub const FIXED_WINDOW_DAYS: usize = 30;

/// The three labeling rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "BB")]
    Bb,
    #[serde(rename = "MACD")]
    Macd,
    #[serde(rename = "RSI")]
    Rsi,
}

impl RuleKind {
    pub const ALL: [RuleKind; 3] = [RuleKind::Bb, RuleKind::Macd, RuleKind::Rsi];

    /// Trading days each rule effectively looks at.
    pub fn window_days(self) -> usize {
        match self {
            RuleKind::Bb => 20,
            RuleKind::Macd => 26,
            RuleKind::Rsi => 27,
        }
    }

    /// First index at which the rule's crossing predicate is decidable,
    /// i.e. one past the first defined indicator value.
    pub fn first_label_index(self) -> usize {
        match self {
            RuleKind::Bb => indicators::BB_WINDOW,
            RuleKind::Rsi => indicators::RSI_PERIOD + 1,
            RuleKind::Macd => indicators::MACD_SLOW + indicators::MACD_SIGNAL - 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Bb => "BB",
            RuleKind::Macd => "MACD",
            RuleKind::Rsi => "RSI",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BB" => Ok(RuleKind::Bb),
            "MACD" => Ok(RuleKind::Macd),
            "RSI" => Ok(RuleKind::Rsi),
            _ => Err(Error::InvalidParameter(format!(
                "unknown rule `{s}` (expected BB, MACD or RSI)"
            ))),
        }
    }
}

/// The value/threshold pair whose upward crossing defines a rule.
pub struct RuleLines {
    pub rule: RuleKind,
    pub value: IndicatorSeries,
    threshold: RuleThreshold,
}

enum RuleThreshold {
    Series(IndicatorSeries),
    Constant(f64),
}

impl RuleLines {
    pub fn compute(series: &PriceSeries, rule: RuleKind) -> Self {
        let closes = series.adj_closes();
        match rule {
            RuleKind::Bb => {
                let bands = indicators::bollinger_of(&closes);
                Self {
                    rule,
                    value: IndicatorSeries::from_values(&closes),
                    threshold: RuleThreshold::Series(bands.lower),
                }
            }
            RuleKind::Macd => {
                let lines = indicators::macd_of(&closes);
                Self {
                    rule,
                    value: lines.macd,
                    threshold: RuleThreshold::Series(lines.signal),
                }
            }
            RuleKind::Rsi => Self {
                rule,
                value: indicators::rsi_of(&closes).rsi,
                threshold: RuleThreshold::Constant(RSI_OVERSOLD),
            },
        }
    }

    pub fn threshold(&self) -> Threshold<'_> {
        match &self.threshold {
            RuleThreshold::Series(s) => Threshold::Series(s),
            RuleThreshold::Constant(c) => Threshold::Constant(*c),
        }
    }

    /// The buy-trigger predicate. Swap this to change a rule's trigger.
    pub fn is_event(&self, t: usize) -> bool {
        indicators::crosses_above_at(&self.value, self.threshold(), t)
    }

    pub fn events(&self) -> Vec<usize> {
        indicators::cross_above(&self.value, self.threshold())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalEvent {
    pub ticker: String,
    pub index: usize,
    pub date: NaiveDate,
    pub rule: RuleKind,
    pub label: u8,
}

/// All buy events of `rule` on `series`.
pub fn detect_signals(series: &PriceSeries, rule: RuleKind) -> Vec<SignalEvent> {
    RuleLines::compute(series, rule)
        .events()
        .into_iter()
        .map(|index| SignalEvent {
            ticker: series.ticker().to_string(),
            index,
            date: series.bars()[index].date,
            rule,
            label: 1,
        })
        .collect()
}

/// The trailing `window_days` bars ending at (and including) `end_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub ticker: String,
    pub rule: RuleKind,
    pub end_index: usize,
    pub end_date: NaiveDate,
    pub bars: Vec<OhlcvBar>,
    pub label: u8,
}

impl WindowSample {
    pub fn window_days(&self) -> usize {
        self.bars.len()
    }
}

/// First end index with a full window and a decidable label.
pub fn first_admissible(rule: RuleKind, window_days: usize) -> usize {
    (window_days - 1).max(rule.first_label_index())
}

fn slice_window(series: &PriceSeries, end_index: usize, window_days: usize) -> &[OhlcvBar] {
    &series.bars()[end_index + 1 - window_days..=end_index]
}

/// Extracts and labels one window using the rule's default length.
pub fn extract_window(series: &PriceSeries, end_index: usize, rule: RuleKind) -> Result<WindowSample> {
    extract_window_sized(series, end_index, rule, rule.window_days())
}

pub fn extract_window_sized(
    series: &PriceSeries,
    end_index: usize,
    rule: RuleKind,
    window_days: usize,
) -> Result<WindowSample> {
    let lines = RuleLines::compute(series, rule);
    window_with_lines(series, &lines, end_index, window_days)
}

pub(crate) fn window_with_lines(
    series: &PriceSeries,
    lines: &RuleLines,
    end_index: usize,
    window_days: usize,
) -> Result<WindowSample> {
    if window_days == 0 {
        return Err(Error::InvalidParameter("window must span at least one day".into()));
    }
    let first = first_admissible(lines.rule, window_days);
    if end_index < first || end_index >= series.len() {
        return Err(Error::InsufficientHistory {
            index: end_index,
            first_admissible: first,
        });
    }
    Ok(WindowSample {
        ticker: series.ticker().to_string(),
        rule: lines.rule,
        end_index,
        end_date: series.bars()[end_index].date,
        bars: slice_window(series, end_index, window_days).to_vec(),
        label: u8::from(lines.is_event(end_index)),
    })
}

/// Knobs of [`sample_balanced_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Target samples per class per ticker.
    pub per_ticker: usize,
    pub seed: u64,
    /// Inclusive range of admissible end dates.
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    /// Negatives closer than this many days to a positive are excluded.
    pub exclusion_radius: usize,
    /// Forces one window length on every rule.
    pub window_override: Option<usize>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            per_ticker: 10,
            seed: 0,
            date_range: None,
            exclusion_radius: 0,
            window_override: None,
        }
    }
}

impl SamplingConfig {
    pub fn window_days(&self, rule: RuleKind) -> usize {
        self.window_override.unwrap_or(rule.window_days())
    }

    /// The 30-day ablation window for every rule.
    pub fn with_fixed_window(mut self) -> Self {
        self.window_override = Some(FIXED_WINDOW_DAYS);
        self
    }
}

/// Labeled windows for one rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rule: RuleKind,
    pub window_days: usize,
    pub samples: Vec<WindowSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.label == 1).count();
        (self.samples.len() - pos, pos)
    }
}

/// Positive and negative candidate end indices of one series.
pub fn candidate_indices(
    series: &PriceSeries,
    lines: &RuleLines,
    window_days: usize,
    config: &SamplingConfig,
) -> (Vec<usize>, Vec<usize>) {
    let first = first_admissible(lines.rule, window_days);
    let in_range = |t: usize| match config.date_range {
        Some((from, to)) => {
            let d = series.bars()[t].date;
            from <= d && d <= to
        }
        None => true,
    };
    let events: BTreeSet<usize> = lines.events().into_iter().collect();
    let near_event = |t: usize| {
        let r = config.exclusion_radius;
        events.range(t.saturating_sub(r)..=t + r).next().is_some()
    };
    let admissible = (first..series.len()).filter(|&t| in_range(t));
    let (pos, neg): (Vec<usize>, Vec<usize>) = admissible.partition(|t| events.contains(t));
    let neg = neg.into_iter().filter(|&t| !near_event(t)).collect();
    (pos, neg)
}

fn draw_sorted(rng: &mut impl rand::Rng, pool: &[usize], n: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    picked
}

/// Draws an exactly class-balanced sample of windows from every ticker.
///
/// Each ticker contributes `min(per_ticker, positives, negatives)` windows
/// of each class; tickers with none are skipped with a warning. Each
/// ticker's draw comes from its own RNG stream keyed by (seed, ticker, rule).
pub fn sample_balanced_dataset(corpus: &[PriceSeries], rule: RuleKind, config: &SamplingConfig) -> Result<Dataset> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("corpus is empty".into()));
    }
    let window_days = config.window_days(rule);
    let mut samples = Vec::new();
    for series in corpus {
        let lines = RuleLines::compute(series, rule);
        let (pos, neg) = candidate_indices(series, &lines, window_days, config);
        let n = config.per_ticker.min(pos.len()).min(neg.len());
        if n == 0 {
            warn!(
                "{}: no admissible {rule} windows ({} positive, {} negative candidates); skipped",
                series.ticker(),
                pos.len(),
                neg.len()
            );
            continue;
        }
        let mut rng = seed::stream(config.seed, &format!("sample/{}/{rule}", series.ticker()));
        let chosen_pos = draw_sorted(&mut rng, &pos, n);
        let chosen_neg = draw_sorted(&mut rng, &neg, n);
        for t in chosen_pos.into_iter().chain(chosen_neg) {
            samples.push(window_with_lines(series, &lines, t, window_days)?);
        }
    }
    Ok(Dataset {
        rule,
        window_days,
        samples,
    })
}

/// One row of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub ticker: String,
    pub end_date: NaiveDate,
    pub rule: RuleKind,
    pub label: u8,
    pub style: RenderStyle,
    pub image_path: String,
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(entries)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{generate_synthetic_series, SyntheticModel};

    fn flat(n: usize) -> PriceSeries {
        let model = SyntheticModel {
            drift: 0.0,
            volatility: 0.0,
            spread: 0.0,
            ..Default::default()
        };
        generate_synthetic_series("FLAT", 1, n, &model).unwrap()
    }

    #[test]
    fn constant_prices_produce_no_events() {
        let s = flat(200);
        for rule in RuleKind::ALL {
            assert!(detect_signals(&s, rule).is_empty(), "{rule}");
        }
    }

    #[test]
    fn first_label_indices() {
        assert_eq!(RuleKind::Bb.first_label_index(), 20);
        assert_eq!(RuleKind::Rsi.first_label_index(), 15);
        assert_eq!(RuleKind::Macd.first_label_index(), 34);
        assert_eq!(first_admissible(RuleKind::Rsi, 27), 26);
        assert_eq!(first_admissible(RuleKind::Bb, 20), 20);
        assert_eq!(first_admissible(RuleKind::Macd, 26), 34);
    }

    #[test]
    fn window_boundaries() {
        let s = generate_synthetic_series("W", 4, 120, &SyntheticModel::default()).unwrap();
        let w = extract_window(&s, 26, RuleKind::Rsi).unwrap();
        assert_eq!(w.bars.len(), 27);
        assert_eq!(w.bars[0], s.bars()[0]);
        assert_eq!(w.bars[26], s.bars()[26]);
        assert!(matches!(
            extract_window(&s, 25, RuleKind::Rsi),
            Err(Error::InsufficientHistory {
                index: 25,
                first_admissible: 26
            })
        ));
        assert!(extract_window(&s, 10, RuleKind::Bb).is_err());
        assert!(extract_window(&s, 120, RuleKind::Bb).is_err());
        assert_eq!(
            extract_window(&s, 60, RuleKind::Macd).unwrap(),
            extract_window(&s, 60, RuleKind::Macd).unwrap()
        );
    }

    #[test]
    fn labels_match_detected_events() {
        let s = generate_synthetic_series("L", 8, 400, &SyntheticModel::default()).unwrap();
        for rule in RuleKind::ALL {
            let events: BTreeSet<usize> = detect_signals(&s, rule).into_iter().map(|e| e.index).collect();
            for t in first_admissible(rule, rule.window_days())..s.len() {
                let w = extract_window(&s, t, rule).unwrap();
                assert_eq!(w.label == 1, events.contains(&t));
            }
        }
    }

    #[test]
    fn scarce_positives_limit_both_classes() {
        let s = generate_synthetic_series("S", 2, 600, &SyntheticModel::default()).unwrap();
        let events = detect_signals(&s, RuleKind::Bb);
        assert!(events.len() > 3);
        // Restrict the date range so that exactly three positives remain.
        let cfg = SamplingConfig {
            date_range: Some((s.bars()[0].date, events[2].date)),
            ..Default::default()
        };
        let ds = sample_balanced_dataset(std::slice::from_ref(&s), RuleKind::Bb, &cfg).unwrap();
        assert_eq!(ds.class_counts(), (3, 3));
    }

    #[test]
    fn exclusion_radius_removes_neighbours() {
        let s = generate_synthetic_series("E", 5, 800, &SyntheticModel::default()).unwrap();
        let lines = RuleLines::compute(&s, RuleKind::Bb);
        let cfg = SamplingConfig {
            exclusion_radius: 3,
            ..Default::default()
        };
        let (pos, neg) = candidate_indices(&s, &lines, 20, &cfg);
        for n in neg {
            assert!(pos.iter().all(|&p| p.abs_diff(n) > 3));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        let corpus: Vec<_> = (0..5)
            .map(|i| generate_synthetic_series(&format!("T{i}"), 11, 700, &SyntheticModel::default()).unwrap())
            .collect();
        let cfg = SamplingConfig {
            seed: 42,
            ..Default::default()
        };
        let a = sample_balanced_dataset(&corpus, RuleKind::Rsi, &cfg).unwrap();
        let b = sample_balanced_dataset(&corpus, RuleKind::Rsi, &cfg).unwrap();
        assert_eq!(a, b);
        let (neg, pos) = a.class_counts();
        assert_eq!(neg, pos);
        assert!(a.samples.iter().all(|w| w.bars.len() == 27));
    }

    #[test]
    fn fixed_window_override() {
        let corpus = vec![generate_synthetic_series("F", 3, 500, &SyntheticModel::default()).unwrap()];
        let cfg = SamplingConfig::default().with_fixed_window();
        for rule in RuleKind::ALL {
            let ds = sample_balanced_dataset(&corpus, rule, &cfg).unwrap();
            assert_eq!(ds.window_days, 30);
            assert!(ds.samples.iter().all(|w| w.bars.len() == 30));
        }
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in RuleKind::ALL {
            assert_eq!(rule.name().parse::<RuleKind>().unwrap(), rule);
        }
        assert!("ADX".parse::<RuleKind>().is_err());
    }
}
