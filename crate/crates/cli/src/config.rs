//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use chartsignal::resample::SWEEP_SIDES;
use chartsignal::{ClassifierKind, Hyperparameters, Representation, Resolution, RuleKind, SyntheticModel};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Inclusive `[from, to]` date range.
pub type DateSpan = (NaiveDate, NaiveDate);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of per-ticker CSV files.
    pub corpus: PathBuf,
    /// Parent of the run directories. Not part of the fingerprint.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub rules: Vec<RuleKind>,
    /// Chart styles, or `tabular` for the raw-value baseline.
    pub styles: Vec<Representation>,
    pub resolutions: Vec<Resolution>,
    pub seed: u64,
    pub per_ticker: usize,
    pub folds: usize,
    pub exclusion_radius: usize,
    /// Use a 30-day window for every rule.
    pub fixed_window: bool,
    pub train_range: Option<DateSpan>,
    pub test_range: Option<DateSpan>,
    pub classifiers: Vec<ClassifierKind>,
    pub threshold: f64,
    /// Shuffle training labels with this seed (permutation null).
    pub label_permutation: Option<u64>,
    pub sweep_resolutions: Vec<Resolution>,
    pub hyperparameters: Hyperparameters,
    pub synth: SynthConfig,
    pub forecast: ForecastConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub tickers: usize,
    pub days: usize,
    pub model: SyntheticModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Tickers to forecast; empty means all.
    pub tickers: Vec<String>,
    /// Signal charts are drawn for at most this many tickers.
    pub charts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("data/corpus"),
            out: PathBuf::from("runs"),
            rules: RuleKind::ALL.to_vec(),
            styles: vec![Representation::Image(chartsignal::RenderStyle::CandleOhlc)],
            resolutions: vec![Resolution::new(30).expect("valid side")],
            seed: 0,
            per_ticker: 10,
            folds: chartsignal::evaluate::DEFAULT_FOLDS,
            exclusion_radius: 0,
            fixed_window: false,
            train_range: None,
            test_range: None,
            classifiers: ClassifierKind::REQUIRED.to_vec(),
            threshold: 0.5,
            label_permutation: None,
            sweep_resolutions: SWEEP_SIDES
                .iter()
                .map(|&s| Resolution::new(s).expect("valid side"))
                .collect(),
            hyperparameters: Hyperparameters::default(),
            synth: SynthConfig::default(),
            forecast: ForecastConfig::default(),
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tickers: 200,
            days: 2000,
            model: SyntheticModel::default(),
        }
    }
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            tickers: Vec::new(),
            charts: 5,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, UsageError> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: &str| Err(UsageError(m.to_string()));
        if self.rules.is_empty() {
            return bad("at least one rule is required");
        }
        if self.styles.is_empty() || self.resolutions.is_empty() {
            return bad("at least one style and one resolution are required");
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required");
        }
        if let Some(k) = self.classifiers.iter().find(|k| !k.is_available()) {
            return Err(UsageError(format!("classifier {k} is not available in this build")));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.per_ticker == 0 {
            return bad("per_ticker must be positive");
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return bad("threshold must lie in [0, 1)");
        }
        for (name, range) in [("train_range", self.train_range), ("test_range", self.test_range)] {
            if let Some((from, to)) = range {
                if from > to {
                    return Err(UsageError(format!("{name}: {from} is after {to}")));
                }
            }
        }
        Ok(())
    }

    pub fn sampling(&self) -> chartsignal::SamplingConfig {
        let s = chartsignal::SamplingConfig {
            per_ticker: self.per_ticker,
            seed: self.seed,
            date_range: self.train_range,
            exclusion_radius: self.exclusion_radius,
            window_override: None,
        };
        if self.fixed_window {
            s.with_fixed_window()
        } else {
            s
        }
    }

    pub fn ensemble_spec(&self) -> chartsignal::evaluate::EnsembleSpec {
        chartsignal::evaluate::EnsembleSpec {
            classifiers: self.classifiers.clone(),
            hyperparameters: self.hyperparameters.clone(),
            threshold: self.threshold,
        }
    }

    pub fn cv_settings(&self) -> chartsignal::evaluate::CvSettings {
        chartsignal::evaluate::CvSettings {
            spec: self.ensemble_spec(),
            folds: self.folds,
            seed: self.seed,
            label_permutation: self.label_permutation,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

/// Parses `FROM:TO` with ISO dates.
pub fn parse_span(s: &str) -> Result<DateSpan, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected FROM:TO, got `{s}`"))?;
    let date = |d: &str| NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d").map_err(|e| format!("`{d}`: {e}"));
    Ok((date(a)?, date(b)?))
}
