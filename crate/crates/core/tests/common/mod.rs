//! Brute-force reference implementations used as test oracles. Each one is
//! written from the indicator definitions directly, sharing no code with the
//! library.
#![allow(dead_code)]

use chartsignal::market::{generate_synthetic_series, OhlcvBar, PriceSeries, SyntheticModel};
use chartsignal::RuleKind;

/// Plain EMA recurrence, seeded with the mean of the first `period` inputs.
/// `start` is the index of the first input.
pub fn ema_from(values: &[f64], start: usize, period: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    let seed_at = start + period - 1;
    if seed_at >= values.len() {
        return out;
    }
    let mut seed = 0.0;
    for v in &values[start..=seed_at] {
        seed += v;
    }
    let mut e = seed / period as f64;
    out[seed_at] = Some(e);
    let a = 2.0 / (period as f64 + 1.0);
    for t in seed_at + 1..values.len() {
        e = a * values[t] + (1.0 - a) * e;
        out[t] = Some(e);
    }
    out
}

/// Lower Bollinger band from a two-pass mean and σ per window.
pub fn lower_band(closes: &[f64]) -> Vec<Option<f64>> {
    (0..closes.len())
        .map(|t| {
            if t < 19 {
                return None;
            }
            let w = &closes[t - 19..=t];
            let mean = w.iter().sum::<f64>() / 20.0;
            let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 20.0;
            Some(mean - 2.0 * var.sqrt())
        })
        .collect()
}

pub fn macd_and_signal(closes: &[f64]) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let fast = ema_from(closes, 0, 12);
    let slow = ema_from(closes, 0, 26);
    let macd: Vec<Option<f64>> = fast.iter().zip(&slow).map(|(f, s)| Some((*f)? - (*s)?)).collect();
    let dense: Vec<f64> = macd.iter().map(|m| m.unwrap_or(0.0)).collect();
    let signal = ema_from(&dense, 25, 9);
    (macd, signal)
}

pub fn rsi(closes: &[f64]) -> Vec<Option<f64>> {
    let mut gains = vec![0.0; closes.len()];
    let mut losses = vec![0.0; closes.len()];
    for t in 1..closes.len() {
        let d = closes[t] - closes[t - 1];
        if d > 0.0 {
            gains[t] = d;
        } else {
            losses[t] = -d;
        }
    }
    let g = ema_from(&gains, 1, 14);
    let l = ema_from(&losses, 1, 14);
    g.iter()
        .zip(&l)
        .map(|(g, l)| {
            let (g, l) = ((*g)?, (*l)?);
            Some(if l == 0.0 {
                if g > 0.0 {
                    100.0
                } else {
                    50.0
                }
            } else {
                100.0 - 100.0 / (1.0 + g / l)
            })
        })
        .collect()
}

fn crossings(value: &[Option<f64>], threshold: &[Option<f64>]) -> Vec<usize> {
    (1..value.len())
        .filter(|&t| match (value[t - 1], threshold[t - 1], value[t], threshold[t]) {
            (Some(a), Some(b), Some(c), Some(d)) => a <= b && c > d,
            _ => false,
        })
        .collect()
}

/// Event indices of a rule, recomputed from scratch.
pub fn events(closes: &[f64], rule: RuleKind) -> Vec<usize> {
    match rule {
        RuleKind::Bb => {
            let v: Vec<Option<f64>> = closes.iter().map(|&c| Some(c)).collect();
            crossings(&v, &lower_band(closes))
        }
        RuleKind::Macd => {
            let (m, s) = macd_and_signal(closes);
            crossings(&m, &s)
        }
        RuleKind::Rsi => {
            let r = rsi(closes);
            crossings(&r, &vec![Some(30.0); closes.len()])
        }
    }
}

pub fn synthetic(ticker: &str, seed: u64, days: usize) -> PriceSeries {
    generate_synthetic_series(ticker, seed, days, &SyntheticModel::default()).unwrap()
}

/// Copies bars with every price passed through `f`.
pub fn map_prices(bars: &[OhlcvBar], f: impl Fn(f64) -> f64) -> Vec<OhlcvBar> {
    bars.iter()
        .map(|b| OhlcvBar {
            open: f(b.open),
            high: f(b.high),
            low: f(b.low),
            close: f(b.close),
            adj_close: f(b.adj_close),
            ..*b
        })
        .collect()
}
