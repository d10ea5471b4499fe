//! Rolling out-of-sample prediction: for every day, the trailing window is
//! encoded and put to the voting ensemble.

use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::classify::VotingEnsemble;
use crate::encode::Encoding;
use crate::error::{Error, Result};
use crate::indicators::bollinger_of;
use crate::labeler::{first_admissible, window_with_lines, RuleKind, RuleLines};
use crate::market::PriceSeries;
use crate::plot::{self, Chart};

pub const FORECAST_HEADER: [&str; 5] = ["ticker", "date", "vote_fraction", "predicted", "true"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub ticker: String,
    pub date: NaiveDate,
    pub vote_fraction: f64,
    pub predicted: u8,
    /// Whether the rule actually fired that day.
    pub truth: Option<u8>,
}

/// Days the forecast covers: an inclusive date range, or the whole series.
pub type DateRange = Option<(NaiveDate, NaiveDate)>;

/// Predicts every day in `range` that has a full window of history.
///
/// The window for day `t` holds bars up to and including `t`, so no later
/// bar can affect the record for `t`. Days without enough history are
/// skipped with a warning.
pub fn rolling_predict(
    series: &PriceSeries,
    ensemble: &VotingEnsemble,
    rule: RuleKind,
    encoding: &Encoding,
    window_days: usize,
    range: DateRange,
) -> Result<Vec<ForecastRecord>> {
    let first = first_admissible(rule, window_days);
    let in_range = |d: NaiveDate| range.is_none_or(|(from, to)| from <= d && d <= to);
    let days: Vec<usize> = (0..series.len()).filter(|&t| in_range(series.bars()[t].date)).collect();
    let skipped = days.iter().filter(|&&t| t < first).count();
    if skipped > 0 {
        warn!(
            "{}: skipping {skipped} day(s) without {window_days} days of history (first admissible {})",
            series.ticker(),
            series
                .bars()
                .get(first)
                .map_or_else(|| "none".to_string(), |b| b.date.to_string())
        );
    }
    let lines = RuleLines::compute(series, rule);
    let windows = days
        .into_iter()
        .filter(|&t| t >= first)
        .map(|t| window_with_lines(series, &lines, t, window_days))
        .collect::<Result<Vec<_>>>()?;
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let x = encoding.encode_all(&windows)?;
    let votes = ensemble.vote_batch(x.view())?;
    Ok(windows
        .iter()
        .zip(votes)
        .map(|(w, v)| ForecastRecord {
            ticker: w.ticker.clone(),
            date: w.end_date,
            vote_fraction: v.vote_fraction,
            predicted: v.label,
            truth: Some(w.label),
        })
        .collect())
}

/// Re-labels records at a different vote threshold.
pub fn apply_threshold(records: &[ForecastRecord], threshold: f64) -> Vec<ForecastRecord> {
    records
        .iter()
        .map(|r| ForecastRecord {
            predicted: u8::from(r.vote_fraction > threshold),
            ..r.clone()
        })
        .collect()
}

/// Hit counts of a forecast against the true signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSummary {
    pub days: usize,
    pub true_signals: usize,
    pub predicted_signals: usize,
    pub hits: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    /// Share of days without a true signal that were predicted positive.
    pub false_alarm_rate: Option<f64>,
}

impl ForecastSummary {
    pub fn of(records: &[ForecastRecord]) -> Self {
        let scored: Vec<(u8, u8)> = records
            .iter()
            .filter_map(|r| r.truth.map(|t| (r.predicted, t)))
            .collect();
        let true_signals = scored.iter().filter(|(_, t)| *t == 1).count();
        let predicted_signals = scored.iter().filter(|(p, _)| *p == 1).count();
        let hits = scored.iter().filter(|&&(p, t)| p == 1 && t == 1).count();
        let quiet = scored.len() - true_signals;
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        Self {
            days: records.len(),
            true_signals,
            predicted_signals,
            hits,
            recall: ratio(hits, true_signals),
            precision: ratio(hits, predicted_signals),
            false_alarm_rate: ratio(predicted_signals - hits, quiet),
        }
    }
}

pub fn write_forecast_csv(path: impl AsRef<Path>, records: &[ForecastRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FORECAST_HEADER)?;
    for r in records {
        w.write_record([
            r.ticker.clone(),
            r.date.to_string(),
            r.vote_fraction.to_string(),
            r.predicted.to_string(),
            r.truth.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Where the markers of a signal chart landed.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalChart {
    pub true_markers: Vec<NaiveDate>,
    pub predicted_markers: Vec<NaiveDate>,
    /// Pixel column of each marker, in the same order.
    pub true_columns: Vec<f64>,
    pub predicted_columns: Vec<f64>,
}

const SIGNAL_W: u32 = 960;
const SIGNAL_H: u32 = 400;

/// Close, 20-day mean and ±2σ bands over the forecast span, with true
/// signals as green squares on the close and predicted buys as blue
/// triangles just below it.
pub fn emit_signal_chart(
    path: impl AsRef<Path>,
    series: &PriceSeries,
    records: &[ForecastRecord],
) -> Result<SignalChart> {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(Error::InvalidParameter("no forecast records to chart".into()));
    };
    let index = |d: NaiveDate| {
        series
            .index_of(d)
            .ok_or_else(|| Error::InvalidParameter(format!("{d} is not a trading day of {}", series.ticker())))
    };
    let (lo, hi) = (index(first.date)?, index(last.date)?);
    let closes = series.adj_closes();
    let bands = bollinger_of(&closes);

    let span = lo..=hi;
    let y_values = span.clone().flat_map(|t| {
        [Some(closes[t]), bands.upper.get(t), bands.lower.get(t)]
            .into_iter()
            .flatten()
    });
    let (ymin, ymax) = plot::extent(y_values);
    let pad = 0.05 * (ymax - ymin);
    let mut chart = Chart::new(SIGNAL_W, SIGNAL_H, (lo as f64, hi as f64), (ymin - pad, ymax + pad));

    let series_line = |s: &dyn Fn(usize) -> Option<f64>| -> Vec<(f64, Option<f64>)> {
        span.clone().map(|t| (t as f64, s(t))).collect()
    };
    chart.line(&series_line(&|t| bands.upper.get(t)), plot::GREY);
    chart.line(&series_line(&|t| bands.lower.get(t)), plot::GREY);
    chart.line(&series_line(&|t| bands.middle.get(t)), plot::ORANGE);
    chart.line(&series_line(&|t| Some(closes[t])), plot::BLACK);

    let mut out = SignalChart {
        true_markers: Vec::new(),
        predicted_markers: Vec::new(),
        true_columns: Vec::new(),
        predicted_columns: Vec::new(),
    };
    for r in records {
        let t = index(r.date)?;
        if r.truth == Some(1) {
            chart.square(t as f64, closes[t], 3, plot::GREEN);
            out.true_markers.push(r.date);
            out.true_columns.push(chart.px(t as f64));
        }
        if r.predicted == 1 {
            chart.triangle_up(t as f64, closes[t], 6, plot::BLUE);
            out.predicted_markers.push(r.date);
            out.predicted_columns.push(chart.px(t as f64));
        }
    }
    chart.save(path)?;
    Ok(out)
}
