//! `chartsignal`: label, render, train and evaluate chart-image classifiers.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use chartsignal::{ClassifierKind, Representation, Resolution, RuleKind};
use clap::{Args, Parser, Subcommand};

use config::{parse_span, DateSpan, RunConfig};

/// A problem with the invocation or the config file.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "chartsignal",
    version,
    about = "Recover trading signals from rendered price charts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a CSV corpus and list its tickers.
    Ingest(Common),
    /// Generate a synthetic corpus into the corpus directory.
    Synth(SynthArgs),
    /// Write the buy events of every rule.
    Label(Common),
    /// Sample balanced windows, render them and write a manifest.
    BuildDataset(Common),
    /// Train one voting ensemble per rule, style and resolution.
    Train(Common),
    /// Cross-validate the ensemble.
    Evaluate(Common),
    /// Cross-validate across the sweep resolutions.
    Sweep(Common),
    /// Cross-validate every chart style and the tabular baseline.
    Compare(Common),
    /// Predict every day of the test range.
    Forecast(ForecastArgs),
}

fn rule(s: &str) -> Result<RuleKind, String> {
    s.parse().map_err(|e: chartsignal::Error| e.to_string())
}

fn representation(s: &str) -> Result<Representation, String> {
    s.parse().map_err(|e: chartsignal::Error| e.to_string())
}

fn resolution(s: &str) -> Result<Resolution, String> {
    let side: usize = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    Resolution::new(side).map_err(|e| e.to_string())
}

fn classifier(s: &str) -> Result<ClassifierKind, String> {
    s.parse().map_err(|e: chartsignal::Error| e.to_string())
}

/// Flags shared by every subcommand. Each overrides the config file.
#[derive(Args, Default)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of per-ticker CSV files.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Parent directory of run directories.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// BB, MACD or RSI; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', value_parser = rule)]
    rule: Vec<RuleKind>,
    /// Chart style or `tabular`; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', value_parser = representation)]
    style: Vec<Representation>,
    /// Square image side; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', value_parser = resolution)]
    resolution: Vec<Resolution>,
    /// Sweep resolutions (sweep only).
    #[arg(long, value_delimiter = ',', value_parser = resolution)]
    sweep_resolution: Vec<Resolution>,
    /// Windows per class per ticker.
    #[arg(long)]
    per_ticker: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Ensemble members; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', value_parser = classifier)]
    classifier: Vec<ClassifierKind>,
    /// Use a 30-day window for every rule.
    #[arg(long)]
    fixed_window: bool,
    /// Training end dates, FROM:TO.
    #[arg(long, value_parser = parse_span)]
    train_range: Option<DateSpan>,
    /// Forecast dates, FROM:TO.
    #[arg(long, value_parser = parse_span)]
    test_range: Option<DateSpan>,
    /// Vote fraction that must be exceeded for a buy.
    #[arg(long)]
    threshold: Option<f64>,
    /// Shuffle labels with this seed before training.
    #[arg(long)]
    permute_labels: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tickers: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    /// Saved ensemble to use instead of training one.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Tickers to forecast; all when omitted.
    #[arg(long, value_delimiter = ',')]
    ticker: Vec<String>,
}

impl Common {
    fn resolve(self) -> Result<RunConfig, UsageError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    c.$field = v;
                }
            };
        }
        macro_rules! set_list {
            ($field:ident, $value:expr) => {
                if !$value.is_empty() {
                    c.$field = $value;
                }
            };
        }
        set!(corpus, self.corpus);
        set!(out, self.out);
        set!(seed, self.seed);
        set!(per_ticker, self.per_ticker);
        set!(folds, self.folds);
        set!(threshold, self.threshold);
        set_list!(rules, self.rule);
        set_list!(styles, self.style);
        set_list!(resolutions, self.resolution);
        set_list!(sweep_resolutions, self.sweep_resolution);
        set_list!(classifiers, self.classifier);
        if self.fixed_window {
            c.fixed_window = true;
        }
        if self.train_range.is_some() {
            c.train_range = self.train_range;
        }
        if self.test_range.is_some() {
            c.test_range = self.test_range;
        }
        if self.permute_labels.is_some() {
            c.label_permutation = self.permute_labels;
        }
        c.validate()?;
        Ok(c)
    }
}

fn dispatch(command: Command) -> anyhow::Result<PathBuf> {
    let run = match command {
        Command::Ingest(a) => commands::ingest(&a.resolve()?)?,
        Command::Synth(a) => {
            let mut c = a.common.resolve()?;
            if let Some(t) = a.tickers {
                c.synth.tickers = t;
            }
            if let Some(d) = a.days {
                c.synth.days = d;
            }
            commands::synth(&c)?
        }
        Command::Label(a) => commands::label(&a.resolve()?)?,
        Command::BuildDataset(a) => commands::build_dataset(&a.resolve()?)?,
        Command::Train(a) => commands::train(&a.resolve()?)?,
        Command::Evaluate(a) => commands::evaluate(&a.resolve()?)?,
        Command::Sweep(a) => commands::sweep(&a.resolve()?)?,
        Command::Compare(a) => commands::compare(&a.resolve()?)?,
        Command::Forecast(a) => {
            let mut c = a.common.resolve()?;
            if !a.ticker.is_empty() {
                c.forecast.tickers = a.ticker;
            }
            commands::forecast(&c, a.model.as_deref())?
        }
    };
    Ok(run.path)
}

/// Maps an error to the documented exit code.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<chartsignal::Error>() {
            return match e {
                chartsignal::Error::InvalidParameter(_)
                | chartsignal::Error::UnsupportedClassifier(_)
                | chartsignal::Error::Upscale { .. } => 1,
                chartsignal::Error::ModelVersion(_) => 2,
                e if e.is_data_error() => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("chartsignal").chain(args.iter().copied()))
    }

    #[test]
    fn flags_override_defaults() {
        let Command::Evaluate(a) = parse(&[
            "evaluate",
            "--rule",
            "bb,rsi",
            "--style",
            "close_line",
            "--resolution",
            "13",
            "--seed",
            "7",
        ])
        .unwrap()
        .command
        else {
            panic!("wrong subcommand");
        };
        let c = a.resolve().unwrap();
        assert_eq!(c.rules, vec![RuleKind::Bb, RuleKind::Rsi]);
        assert_eq!(c.resolutions, vec![Resolution::new(13).unwrap()]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.per_ticker, 10);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 3\nper_ticker = 4\n").unwrap();
        let Command::Label(a) = parse(&["label", "--config", p.to_str().unwrap(), "--seed", "9"])
            .unwrap()
            .command
        else {
            panic!("wrong subcommand");
        };
        let c = a.resolve().unwrap();
        assert_eq!((c.seed, c.per_ticker), (9, 4));
    }

    #[test]
    fn bad_values_are_rejected_at_parse_time() {
        assert!(parse(&["evaluate", "--rule", "XYZ"]).is_err());
        assert!(parse(&["evaluate", "--resolution", "1"]).is_err());
        assert!(parse(&["nope"]).is_err());
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let usage: anyhow::Error = UsageError("x".into()).into();
        assert_eq!(exit_code(&usage), 1);
        let data: anyhow::Error = chartsignal::Error::EmptySeries { ticker: "A".into() }.into();
        assert_eq!(exit_code(&data), 2);
        let wrapped = data.context("loading corpus");
        assert_eq!(exit_code(&wrapped), 2);
        let param: anyhow::Error = chartsignal::Error::InvalidParameter("k".into()).into();
        assert_eq!(exit_code(&param), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("boom")), 3);
    }
}
