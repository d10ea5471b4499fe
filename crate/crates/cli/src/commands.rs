//! One function per subcommand. Each reads what it needs, opens a run
//! directory and writes its artifacts there.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chartsignal::classify::train_ensemble;
use chartsignal::evaluate::{self, EvalReport, Evaluation};
use chartsignal::forecast::{self, ForecastRecord, ForecastSummary};
use chartsignal::labeler::{self, detect_signals, sample_balanced_dataset, ManifestEntry};
use chartsignal::market::{self, generate_synthetic_corpus};
use chartsignal::{Dataset, Encoding, PriceSeries, RasterImage, Representation, Resolution, RuleKind, VotingEnsemble};
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::run::{corpus_digest, RunDir, RunRecord};
use crate::UsageError;

/// The corpus, parsed and fingerprinted.
pub struct Corpus {
    pub series: Vec<PriceSeries>,
    pub digest: String,
}

pub fn load_corpus(config: &RunConfig) -> Result<Corpus> {
    let dir = &config.corpus;
    if !dir.is_dir() {
        return Err(UsageError(format!("corpus directory {} does not exist", dir.display())).into());
    }
    let digest = corpus_digest(dir)?;
    let series = market::load_corpus(dir)?;
    if series.is_empty() {
        return Err(UsageError(format!("no CSV files in {}", dir.display())).into());
    }
    info!("loaded {} series from {}", series.len(), dir.display());
    Ok(Corpus { series, digest })
}

fn open_run(command: &str, config: &RunConfig, corpus: Option<&Corpus>) -> Result<RunDir> {
    RunDir::create(&RunRecord {
        command,
        corpus_digest: corpus.map(|c| c.digest.clone()),
        config,
    })
}

/// Encodings to run: every image style at every resolution, and the tabular
/// baseline once.
pub fn encodings(styles: &[Representation], resolutions: &[Resolution]) -> Vec<Encoding> {
    let mut out = Vec::new();
    for &rep in styles {
        match rep {
            Representation::Tabular => out.push(Encoding::tabular()),
            Representation::Image(_) => out.extend(resolutions.iter().map(|&r| Encoding::new(rep, r))),
        }
    }
    out.dedup();
    out
}

/// Short tag for file names, e.g. `BB_candle_ohlc_30` or `RSI_tabular`.
pub fn cell_tag(rule: RuleKind, encoding: &Encoding) -> String {
    match encoding.image_side() {
        Some(side) => format!("{rule}_{}_{side}", encoding.representation),
        None => format!("{rule}_{}", encoding.representation),
    }
}

fn sample(corpus: &Corpus, rule: RuleKind, config: &RunConfig) -> Result<Dataset> {
    let ds = sample_balanced_dataset(&corpus.series, rule, &config.sampling())?;
    let (neg, pos) = ds.class_counts();
    info!(
        "{rule}: {pos} positive and {neg} negative windows of {} days",
        ds.window_days
    );
    Ok(ds)
}

#[derive(Serialize)]
struct IngestRow {
    ticker: String,
    bars: usize,
    first_date: String,
    last_date: String,
}

pub fn ingest(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("ingest", config, Some(&corpus))?;
    let rows: Vec<IngestRow> = corpus
        .series
        .iter()
        .map(|s| IngestRow {
            ticker: s.ticker().to_string(),
            bars: s.len(),
            first_date: s.bars()[0].date.to_string(),
            last_date: s.bars()[s.len() - 1].date.to_string(),
        })
        .collect();
    let mut w = csv_writer(&run.file("ingest.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let total: usize = rows.iter().map(|r| r.bars).sum();
    info!("{} tickers, {total} bars, all valid", rows.len());
    run.write_json(
        "summary.json",
        &serde_json::json!({ "tickers": rows.len(), "bars": total }),
    )?;
    Ok(run)
}

pub fn synth(config: &RunConfig) -> Result<RunDir> {
    let s = &config.synth;
    let corpus = generate_synthetic_corpus(config.seed, s.tickers, s.days, &s.model)?;
    fs::create_dir_all(&config.corpus).with_context(|| format!("creating {}", config.corpus.display()))?;
    for series in &corpus {
        market::write_csv_series(series, config.corpus.join(format!("{}.csv", series.ticker())))?;
    }
    info!(
        "wrote {} synthetic series of {} days to {}",
        s.tickers,
        s.days,
        config.corpus.display()
    );
    let run = open_run("synth", config, None)?;
    run.write_json(
        "summary.json",
        &serde_json::json!({ "tickers": s.tickers, "days": s.days, "corpus": config.corpus }),
    )?;
    Ok(run)
}

pub fn label(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("label", config, Some(&corpus))?;
    let mut counts = BTreeMap::new();
    for &rule in &config.rules {
        let mut w = csv_writer(&run.file(&format!("signals_{rule}.csv")))?;
        let mut n = 0usize;
        for series in &corpus.series {
            for e in detect_signals(series, rule) {
                w.serialize(&e)?;
                n += 1;
            }
        }
        w.flush()?;
        info!("{rule}: {n} buy events");
        counts.insert(rule.name(), n);
    }
    run.write_json("summary.json", &counts)?;
    Ok(run)
}

fn image_name(e: &chartsignal::WindowSample) -> String {
    format!("{}_{}_{}.png", e.ticker, e.end_date, e.label)
}

/// Samples, renders and downscales every window, writing one PNG per
/// sample and a manifest. Images already on disk with the expected size are
/// reused, so an interrupted run picks up where it stopped.
pub fn build_dataset(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("build-dataset", config, Some(&corpus))?;
    let mut entries = Vec::new();
    let mut jobs = Vec::new();
    for &rule in &config.rules {
        let ds = sample(&corpus, rule, config)?;
        for enc in encodings(&config.styles, &config.resolutions) {
            let Some(style) = enc.representation.style() else {
                warn!("the tabular baseline has no images; skipped");
                continue;
            };
            let rel = format!("images/{rule}/{style}/{}", enc.resolution.side());
            fs::create_dir_all(run.file(&rel))?;
            for s in &ds.samples {
                let image_path = format!("{rel}/{}", image_name(s));
                entries.push(ManifestEntry {
                    ticker: s.ticker.clone(),
                    end_date: s.end_date,
                    rule,
                    label: s.label,
                    style,
                    image_path: image_path.clone(),
                });
                jobs.push((s.clone(), enc, image_path));
            }
        }
    }
    let manifest = run.file("manifest.json");
    labeler::write_manifest(&manifest, &entries)?;

    let (mut rendered, mut reused) = (0usize, 0usize);
    for (sample, enc, rel) in &jobs {
        let path = run.path.join(rel);
        let side = enc.resolution.side();
        if RasterImage::load_png(&path).is_ok_and(|img| img.width == side && img.height == side) {
            reused += 1;
            continue;
        }
        enc.image_of(sample)?.save_png(&path)?;
        rendered += 1;
    }
    info!(
        "{} manifest entries: {rendered} rendered, {reused} reused",
        entries.len()
    );
    run.write_json(
        "summary.json",
        &serde_json::json!({ "entries": entries.len(), "rendered": rendered, "reused": reused }),
    )?;
    Ok(run)
}

#[derive(Serialize)]
struct ModelIndex {
    rule: RuleKind,
    style: Representation,
    resolution: Option<usize>,
    window_days: usize,
    n_samples: usize,
    path: String,
}

fn fit(ds: &Dataset, enc: &Encoding, config: &RunConfig) -> Result<VotingEnsemble> {
    let x = enc.encode_all(&ds.samples)?;
    let y = evaluate::effective_labels(ds, &config.cv_settings());
    let ens = train_ensemble(&config.classifiers, x.view(), &y, config.seed, &config.hyperparameters)?;
    let mut ens = ens.with_threshold(config.threshold);
    for m in &mut ens.members {
        *m = m.clone().with_provenance(enc.feature_mode(), enc.image_side());
    }
    Ok(ens)
}

pub fn train(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("train", config, Some(&corpus))?;
    fs::create_dir_all(run.file("models"))?;
    let mut index = Vec::new();
    for &rule in &config.rules {
        let ds = sample(&corpus, rule, config)?;
        for enc in encodings(&config.styles, &config.resolutions) {
            let tag = cell_tag(rule, &enc);
            info!(
                "{tag}: training {} members on {} windows",
                config.classifiers.len(),
                ds.len()
            );
            let ens = fit(&ds, &enc, config)?;
            let rel = format!("models/{tag}.json");
            ens.save(run.file(&rel))?;
            index.push(ModelIndex {
                rule,
                style: enc.representation,
                resolution: enc.image_side(),
                window_days: ds.window_days,
                n_samples: ds.len(),
                path: rel,
            });
        }
    }
    run.write_json("models.json", &index)?;
    Ok(run)
}

fn write_reports(run: &RunDir, evaluations: &[Evaluation]) -> Result<Vec<EvalReport>> {
    let reports: Vec<EvalReport> = evaluations.iter().map(|e| e.report.clone()).collect();
    evaluate::write_results_csv(run.file("results.csv"), &reports)?;
    run.write_json("report.json", &reports)?;
    for e in evaluations {
        let c = &e.report.config;
        let enc = match (c.style, c.resolution) {
            (Representation::Image(_), Some(side)) => Encoding::new(c.style, Resolution::new(side)?),
            _ => Encoding::tabular(),
        };
        evaluate::write_predictions_csv(
            run.file(&format!("predictions_{}.csv", cell_tag(c.rule, &enc))),
            &e.predictions,
        )?;
        info!(
            "{}: accuracy {:.3} ± {:.3}",
            cell_tag(c.rule, &enc),
            e.report.accuracy.mean,
            e.report.accuracy.std
        );
    }
    Ok(reports)
}

pub fn evaluate(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("evaluate", config, Some(&corpus))?;
    let settings = config.cv_settings();
    let mut evaluations = Vec::new();
    for &rule in &config.rules {
        let ds = sample(&corpus, rule, config)?;
        for enc in encodings(&config.styles, &config.resolutions) {
            evaluations.push(evaluate::evaluate_dataset(&ds, &enc, &settings)?);
        }
    }
    write_reports(&run, &evaluations)?;
    Ok(run)
}

pub fn sweep(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("sweep", config, Some(&corpus))?;
    let settings = config.cv_settings();
    let styles: Vec<_> = config.styles.iter().filter_map(|r| r.style()).collect();
    if styles.is_empty() {
        return Err(UsageError("sweep needs at least one image style".into()).into());
    }
    let mut evaluations = Vec::new();
    for &rule in &config.rules {
        let ds = sample(&corpus, rule, config)?;
        for &style in &styles {
            evaluations.extend(evaluate::resolution_sweep(
                &ds,
                style,
                &config.sweep_resolutions,
                &settings,
            )?);
        }
    }
    let reports = write_reports(&run, &evaluations)?;
    for style in styles {
        let subset: Vec<EvalReport> = reports
            .iter()
            .filter(|r| r.config.style == Representation::Image(style))
            .cloned()
            .collect();
        evaluate::resolution_chart(run.file(&format!("sweep_{style}.png")), &subset)?;
    }
    Ok(run)
}

/// One row of the style comparison table.
#[derive(Debug, Serialize)]
pub struct TableRow {
    pub rule: RuleKind,
    pub style: Representation,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub precision_mean: Option<f64>,
    pub precision_std: Option<f64>,
}

/// Every chart style plus the tabular baseline, for every rule, on the
/// same windows and folds. Uses the first configured resolution.
pub fn compare(config: &RunConfig) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let run = open_run("compare", config, Some(&corpus))?;
    let settings = config.cv_settings();
    let resolution = config.resolutions[0];
    let mut evaluations = Vec::new();
    for &rule in &config.rules {
        let ds = sample(&corpus, rule, config)?;
        evaluations.extend(evaluate::representation_comparison(
            &ds,
            &Representation::all(),
            resolution,
            &settings,
        )?);
    }
    let reports = write_reports(&run, &evaluations)?;
    let mut w = csv_writer(&run.file("table.csv"))?;
    for r in &reports {
        w.serialize(TableRow {
            rule: r.config.rule,
            style: r.config.style,
            accuracy_mean: r.accuracy.mean,
            accuracy_std: r.accuracy.std,
            precision_mean: r.precision.map(|p| p.mean),
            precision_std: r.precision.map(|p| p.std),
        })?;
    }
    w.flush()?;
    evaluate::representation_chart(run.file("compare.png"), &reports)?;
    Ok(run)
}

#[derive(Serialize)]
struct ForecastCell {
    rule: RuleKind,
    style: Representation,
    resolution: Option<usize>,
    overall: ForecastSummary,
    tickers: BTreeMap<String, ForecastSummary>,
}

/// Trains on the training range (or loads `model`) and predicts every day
/// of the test range for the selected tickers.
pub fn forecast(config: &RunConfig, model: Option<&Path>) -> Result<RunDir> {
    let corpus = load_corpus(config)?;
    let cells: Vec<(RuleKind, Encoding)> = config
        .rules
        .iter()
        .flat_map(|&rule| {
            encodings(&config.styles, &config.resolutions)
                .into_iter()
                .map(move |e| (rule, e))
        })
        .collect();
    if model.is_some() && cells.len() != 1 {
        return Err(UsageError("--model needs exactly one rule, style and resolution".into()).into());
    }
    let targets: Vec<&PriceSeries> = if config.forecast.tickers.is_empty() {
        corpus.series.iter().collect()
    } else {
        config
            .forecast
            .tickers
            .iter()
            .map(|t| {
                corpus
                    .series
                    .iter()
                    .find(|s| s.ticker() == t)
                    .ok_or_else(|| UsageError(format!("ticker {t} is not in the corpus")))
            })
            .collect::<Result<_, _>>()?
    };
    if config.test_range.is_none() {
        warn!("no test range set; forecasting every day of every series");
    }

    let run = open_run("forecast", config, Some(&corpus))?;
    fs::create_dir_all(run.file("charts"))?;
    let mut summaries = Vec::new();
    for (rule, enc) in cells {
        let tag = cell_tag(rule, &enc);
        let window_days = config.sampling().window_days(rule);
        let ensemble = match model {
            Some(p) => VotingEnsemble::load(p)?.with_threshold(config.threshold),
            None => fit(&sample(&corpus, rule, config)?, &enc, config)?,
        };
        let mut all: Vec<ForecastRecord> = Vec::new();
        let mut per_ticker = BTreeMap::new();
        for (i, series) in targets.iter().enumerate() {
            let records = forecast::rolling_predict(series, &ensemble, rule, &enc, window_days, config.test_range)?;
            per_ticker.insert(series.ticker().to_string(), ForecastSummary::of(&records));
            if i < config.forecast.charts && !records.is_empty() {
                forecast::emit_signal_chart(
                    run.file(&format!("charts/{tag}_{}.png", series.ticker())),
                    series,
                    &records,
                )?;
            }
            all.extend(records);
        }
        forecast::write_forecast_csv(run.file(&format!("forecast_{tag}.csv")), &all)?;
        let overall = ForecastSummary::of(&all);
        info!(
            "{tag}: {} days, {} true signals, {} predicted, recall {:?}",
            overall.days, overall.true_signals, overall.predicted_signals, overall.recall
        );
        summaries.push(ForecastCell {
            rule,
            style: enc.representation,
            resolution: enc.image_side(),
            overall,
            tickers: per_ticker,
        });
    }
    run.write_json("summary.json", &summaries)?;
    Ok(run)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chartsignal::RenderStyle;

    #[test]
    fn tabular_runs_once_whatever_the_resolutions() {
        let res: Vec<Resolution> = [13, 30].iter().map(|&s| Resolution::new(s).unwrap()).collect();
        let styles = vec![Representation::Image(RenderStyle::CloseLine), Representation::Tabular];
        let e = encodings(&styles, &res);
        assert_eq!(e.len(), 3);
        assert_eq!(cell_tag(RuleKind::Bb, &e[0]), "BB_close_line_13");
        assert_eq!(cell_tag(RuleKind::Rsi, &e[2]), "RSI_tabular");
    }
}
