//! Technical indicators over daily series.
//!
//! Every output is aligned 1:1 with its input; `None` marks the warm-up
//! span. Values at index `t` depend only on inputs `0..=t`.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::PriceSeries;

pub const BB_WINDOW: usize = 20;
pub const BB_K: f64 = 2.0;
pub const MACD_FAST: usize = 12;
pub const MACD_SLOW: usize = 26;
pub const MACD_SIGNAL: usize = 9;
pub const RSI_PERIOD: usize = 14;

/// A real series with an undefined warm-up prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries(Vec<Option<f64>>);

impl IndicatorSeries {
    pub fn undefined(len: usize) -> Self {
        Self(vec![None; len])
    }

    pub fn from_values(values: &[f64]) -> Self {
        Self(values.iter().copied().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0.get(i).copied().flatten()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.0
    }

    pub fn first_defined(&self) -> Option<usize> {
        self.0.iter().position(Option::is_some)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| Some(f((*a)?, (*b)?)))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|v| v.map(&f)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BollingerBands {
    pub middle: IndicatorSeries,
    pub upper: IndicatorSeries,
    pub lower: IndicatorSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacdLines {
    pub macd: IndicatorSeries,
    pub signal: IndicatorSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsiSeries {
    pub rsi: IndicatorSeries,
}

/// Simple moving average over the trailing window that includes day `t`.
/// A window longer than the series yields an all-undefined result.
pub fn sma(values: &[f64], window: usize) -> IndicatorSeries {
    assert!(window >= 1, "sma window must be at least 1");
    let mut out = IndicatorSeries::undefined(values.len());
    for t in window.saturating_sub(1)..values.len() {
        let slice = &values[t + 1 - window..=t];
        out.0[t] = Some(slice.iter().sum::<f64>() / window as f64);
    }
    out
}

/// Population standard deviation over the same trailing window as [`sma`].
pub fn rolling_std(values: &[f64], window: usize) -> IndicatorSeries {
    assert!(window >= 2, "rolling_std window must be at least 2");
    let mut out = IndicatorSeries::undefined(values.len());
    for t in window.saturating_sub(1)..values.len() {
        let slice = &values[t + 1 - window..=t];
        let mean = slice.iter().sum::<f64>() / window as f64;
        let var = slice.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / window as f64;
        out.0[t] = Some(var.sqrt());
    }
    out
}

/// EMA with α = 2/(period+1), seeded with the SMA of the first `period`
/// defined values.
pub fn ema(values: &[f64], period: usize) -> IndicatorSeries {
    ema_of(&IndicatorSeries::from_values(values), period)
}

/// [`ema`] over a series that may itself have a warm-up prefix; the
/// recurrence starts at the first defined value.
pub fn ema_of(input: &IndicatorSeries, period: usize) -> IndicatorSeries {
    assert!(period >= 1, "ema period must be at least 1");
    let mut out = IndicatorSeries::undefined(input.len());
    let Some(start) = input.first_defined() else {
        return out;
    };
    let seed_at = start + period - 1;
    if seed_at >= input.len() {
        return out;
    }
    let alpha = 2.0 / (period as f64 + 1.0);
    let seed = (start..=seed_at)
        .map(|i| input.get(i).expect("defined after first_defined"))
        .sum::<f64>()
        / period as f64;
    out.0[seed_at] = Some(seed);
    let mut prev = seed;
    for t in seed_at + 1..input.len() {
        let x = input.get(t).expect("defined after first_defined");
        prev = alpha * x + (1.0 - alpha) * prev;
        out.0[t] = Some(prev);
    }
    out
}

/// 20-day SMA of adjusted close ± 2 population σ.
pub fn bollinger(series: &PriceSeries) -> BollingerBands {
    bollinger_of(&series.adj_closes())
}

pub fn bollinger_of(closes: &[f64]) -> BollingerBands {
    let middle = sma(closes, BB_WINDOW);
    let sd = rolling_std(closes, BB_WINDOW);
    let upper = middle.zip_with(&sd, |m, s| m + BB_K * s);
    let lower = middle.zip_with(&sd, |m, s| m - BB_K * s);
    BollingerBands { middle, upper, lower }
}

/// EMA12 − EMA26 of adjusted close and its 9-day EMA signal line.
pub fn macd_lines(series: &PriceSeries) -> MacdLines {
    macd_of(&series.adj_closes())
}

pub fn macd_of(closes: &[f64]) -> MacdLines {
    let fast = ema(closes, MACD_FAST);
    let slow = ema(closes, MACD_SLOW);
    let macd = fast.zip_with(&slow, |f, s| f - s);
    let signal = ema_of(&macd, MACD_SIGNAL);
    MacdLines { macd, signal }
}

/// RSI with true-EMA smoothing (α = 2/15) of gains and losses.
pub fn rsi(series: &PriceSeries) -> RsiSeries {
    rsi_of(&series.adj_closes())
}

pub fn rsi_of(closes: &[f64]) -> RsiSeries {
    let n = closes.len();
    let mut gains = IndicatorSeries::undefined(n);
    let mut losses = IndicatorSeries::undefined(n);
    for t in 1..n {
        let d = closes[t] - closes[t - 1];
        gains.0[t] = Some(d.max(0.0));
        losses.0[t] = Some((-d).max(0.0));
    }
    let avg_gain = ema_of(&gains, RSI_PERIOD);
    let avg_loss = ema_of(&losses, RSI_PERIOD);
    let rsi = avg_gain.zip_with(&avg_loss, |g, l| {
        if l == 0.0 {
            if g > 0.0 {
                100.0
            } else {
                50.0
            }
        } else {
            100.0 - 100.0 / (1.0 + g / l)
        }
    });
    RsiSeries { rsi }
}

/// Threshold argument of [`cross_above`].
#[derive(Debug, Clone, Copy)]
pub enum Threshold<'a> {
    Series(&'a IndicatorSeries),
    Constant(f64),
}

impl Threshold<'_> {
    fn at(&self, i: usize) -> Option<f64> {
        match self {
            Threshold::Series(s) => s.get(i),
            Threshold::Constant(c) => Some(*c),
        }
    }
}

/// `value[t-1] <= threshold[t-1]` and `value[t] > threshold[t]`, with all
/// four values defined.
pub fn crosses_above_at(value: &IndicatorSeries, threshold: Threshold<'_>, t: usize) -> bool {
    if t == 0 {
        return false;
    }
    match (value.get(t - 1), threshold.at(t - 1), value.get(t), threshold.at(t)) {
        (Some(v0), Some(th0), Some(v1), Some(th1)) => v0 <= th0 && v1 > th1,
        _ => false,
    }
}

/// Indices where `value` crosses from at-or-below to strictly above `threshold`.
pub fn cross_above(value: &IndicatorSeries, threshold: Threshold<'_>) -> Vec<usize> {
    (1..value.len())
        .filter(|&t| crosses_above_at(value, threshold, t))
        .collect()
}

/// Debug dump as `date,value`; undefined values are left empty.
pub fn write_indicator_csv(path: impl AsRef<Path>, dates: &[NaiveDate], series: &IndicatorSeries) -> Result<()> {
    if dates.len() != series.len() {
        return Err(Error::DimensionMismatch {
            expected: dates.len(),
            actual: series.len(),
        });
    }
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["date", "value"])?;
    for (d, v) in dates.iter().zip(series.values()) {
        w.write_record([d.to_string(), v.map(|x| x.to_string()).unwrap_or_default()])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(n: usize) -> Vec<f64> {
        (1..=n).map(|x| x as f64).collect()
    }

    #[test]
    fn sma_examples() {
        let c = vec![4.2; 30];
        let s = sma(&c, 7);
        assert_eq!(s.first_defined(), Some(6));
        assert!((6..30).all(|t| (s.get(t).unwrap() - 4.2).abs() < 1e-12));

        assert_eq!(sma(&ramp(20), 20).get(19), Some(10.5));

        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(sma(&v, 1), IndicatorSeries::from_values(&v));
    }

    #[test]
    fn sma_window_longer_than_series_is_undefined() {
        let s = sma(&[1.0, 2.0], 5);
        assert_eq!(s, IndicatorSeries::undefined(2));
    }

    #[test]
    fn rolling_std_examples() {
        let s = rolling_std(&[7.0; 25], 20);
        assert_eq!(s.get(24), Some(0.0));

        // Σ(x−10.5)²/20 over 1..=20 = 665/20 = 33.25
        assert_abs_diff_eq!(
            rolling_std(&ramp(20), 20).get(19).unwrap(),
            33.25f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(rolling_std(&ramp(20), 20).get(19).unwrap(), 5.7663, epsilon = 1e-4);

        let (a, b) = (3.0, 8.5);
        assert_abs_diff_eq!(
            rolling_std(&[a, b], 2).get(1).unwrap(),
            (a - b).abs() / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ema_examples() {
        let e = ema(&[1.0, 2.0, 3.0], 2);
        assert_eq!(e.get(0), None);
        assert_abs_diff_eq!(e.get(1).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.get(2).unwrap(), 2.5, epsilon = 1e-15);

        let c = ema(&[2.5; 40], 9);
        assert!((8..40).all(|t| (c.get(t).unwrap() - 2.5).abs() < 1e-12));
    }

    #[test]
    fn ema_lag_on_linear_ramp() {
        // Steady-state lag of an EMA on a ramp of slope m is m·(period−1)/2.
        let m = 0.7;
        let period = 10;
        let x: Vec<f64> = (0..500).map(|t| m * t as f64).collect();
        let e = ema(&x, period);
        let lag = x[499] - e.get(499).unwrap();
        assert_abs_diff_eq!(lag, m * (period as f64 - 1.0) / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn bollinger_of_ramp() {
        let bb = bollinger_of(&ramp(20));
        assert_abs_diff_eq!(bb.lower.get(19).unwrap(), 10.5 - 2.0 * 33.25f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(bb.lower.get(19).unwrap(), -1.0326, epsilon = 1e-4);
        assert_eq!(bb.lower.first_defined(), Some(19));
    }

    #[test]
    fn bollinger_of_constant_prices_collapses() {
        let bb = bollinger_of(&[50.0; 60]);
        for t in 19..60 {
            assert_eq!(bb.upper.get(t), bb.middle.get(t));
            assert_eq!(bb.lower.get(t), bb.middle.get(t));
        }
        assert!(cross_above(&IndicatorSeries::from_values(&[50.0; 60]), Threshold::Series(&bb.lower)).is_empty());
    }

    #[test]
    fn macd_of_constant_is_zero() {
        let m = macd_of(&[10.0; 80]);
        assert_eq!(m.macd.first_defined(), Some(25));
        assert_eq!(m.signal.first_defined(), Some(33));
        for t in 33..80 {
            assert_abs_diff_eq!(m.macd.get(t).unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.signal.get(t).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn macd_on_ramp_converges_to_lag_difference() {
        // EMA lag is m(p−1)/2, so EMA12 − EMA26 → m(26−12)/2 = 7m.
        let m = 0.3;
        let x: Vec<f64> = (0..600).map(|t| 100.0 + m * t as f64).collect();
        let lines = macd_of(&x);
        assert_abs_diff_eq!(lines.macd.get(599).unwrap(), 7.0 * m, epsilon = 1e-9);
        assert_abs_diff_eq!(lines.signal.get(599).unwrap(), 7.0 * m, epsilon = 1e-9);
    }

    #[test]
    fn macd_turns_positive_after_a_step() {
        let mut x = vec![100.0; 60];
        x.extend(vec![110.0; 20]);
        let lines = macd_of(&x);
        assert_abs_diff_eq!(lines.macd.get(59).unwrap(), 0.0, epsilon = 1e-12);
        // Direct recurrence: one bar after the step the fast EMA leads the slow one.
        let a_fast = 2.0 / 13.0;
        let a_slow = 2.0 / 27.0;
        let expected = (a_fast - a_slow) * 10.0;
        assert_abs_diff_eq!(lines.macd.get(60).unwrap(), expected, epsilon = 1e-9);
        assert!(lines.macd.get(60).unwrap() > 0.0);
        assert_eq!(cross_above(&lines.macd, Threshold::Series(&lines.signal)), vec![60]);
    }

    #[test]
    fn rsi_monotone_extremes() {
        let up: Vec<f64> = (0..60).map(|t| 10.0 + t as f64).collect();
        let down: Vec<f64> = (0..60).map(|t| 100.0 - t as f64).collect();
        let r_up = rsi_of(&up).rsi;
        let r_down = rsi_of(&down).rsi;
        assert_eq!(r_up.first_defined(), Some(14));
        assert!((14..60).all(|t| r_up.get(t) == Some(100.0)));
        assert!((14..60).all(|t| r_down.get(t) == Some(0.0)));
        assert!((14..60).all(|t| rsi_of(&[5.0; 60]).rsi.get(t) == Some(50.0)));
    }

    #[test]
    fn rsi_of_alternating_increments_settles_around_fifty() {
        let mut x = vec![100.0];
        for t in 0..1000 {
            let last = *x.last().unwrap();
            x.push(if t % 2 == 0 { last + 1.0 } else { last - 1.0 });
        }
        let r = rsi_of(&x).rsi;
        // The EMA recurrence ends in a two-cycle: after an up day the gain
        // average is 1/(2−α) and the loss average (1−α)/(2−α).
        let alpha = 2.0 / 15.0;
        let high = 100.0 / (2.0 - alpha);
        let low = 100.0 * (1.0 - alpha) / (2.0 - alpha);
        let (a, b) = (r.get(999).unwrap(), r.get(1000).unwrap());
        assert_abs_diff_eq!(a.max(b), high, epsilon = 1e-6);
        assert_abs_diff_eq!(a.min(b), low, epsilon = 1e-6);
        assert_abs_diff_eq!(0.5 * (a + b), 50.0, epsilon = 1e-6);
    }

    #[test]
    fn cross_above_examples() {
        let v = IndicatorSeries::from_values(&[1.0, 2.0]);
        assert_eq!(cross_above(&v, Threshold::Constant(1.5)), vec![1]);
        let touch = IndicatorSeries::from_values(&[1.5, 2.0]);
        assert_eq!(cross_above(&touch, Threshold::Constant(1.5)), vec![1]);
        let below = IndicatorSeries::from_values(&[0.1, 0.2, 0.3, 0.4]);
        assert!(cross_above(&below, Threshold::Constant(1.0)).is_empty());
        let staying_above = IndicatorSeries::from_values(&[2.0, 3.0]);
        assert!(cross_above(&staying_above, Threshold::Constant(1.0)).is_empty());
    }

    #[test]
    fn cross_above_needs_defined_neighbours() {
        let v = IndicatorSeries(vec![None, Some(0.0), Some(2.0)]);
        assert_eq!(cross_above(&v, Threshold::Constant(1.0)), vec![2]);
        let th = IndicatorSeries(vec![None, None, Some(1.0)]);
        assert!(cross_above(&v, Threshold::Series(&th)).is_empty());
    }
}
