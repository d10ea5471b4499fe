//! Cross-validated scoring of the voting ensemble, the resolution sweep and
//! the representation comparison.

use std::path::Path;

use log::info;
use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classify::{train_ensemble, votes_from_member_labels, ClassifierKind, Hyperparameters};
use crate::encode::{Encoding, Representation};
use crate::error::{Error, Result};
use crate::labeler::{Dataset, RuleKind};
use crate::plot::{self, Chart};
use crate::raster::RenderStyle;
use crate::resample::Resolution;
use crate::seed;

pub const DEFAULT_FOLDS: usize = 5;

/// Header of the per-fold results table.
pub const RESULTS_HEADER: [&str; 7] = [
    "rule",
    "style",
    "resolution",
    "classifier",
    "fold",
    "accuracy",
    "precision",
];

/// Row label of the ensemble in the results table.
pub const VOTING: &str = "voting";

/// Splits sample indices into `k` stratified folds (test indices, sorted).
///
/// Each class is shuffled on its own stream and dealt round-robin, class 0
/// first, so per-fold class counts differ by at most one and fold sizes by
/// at most one. Every class needs at least `k` members, except for
/// leave-one-out (`k` equal to the sample count).
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} folds for {n} samples")));
    }
    let mut order = Vec::with_capacity(n);
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        if members.len() < k && k != n {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                folds: k,
            });
        }
        members.shuffle(&mut seed::stream(seed, &format!("kfold/{k}/{class}")));
        order.extend(members);
    }
    if order.len() != n {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (p, i) in order.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` when nothing was predicted positive.
    pub precision: Option<f64>,
}

/// Accuracy and precision (positive = buy).
pub fn score(predictions: &[u8], truths: &[u8]) -> Result<Metrics> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::InvalidParameter("cannot score an empty fold".into()));
    }
    let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    let predicted_pos = predictions.iter().filter(|&&p| p == 1).count();
    let true_pos = predictions
        .iter()
        .zip(truths)
        .filter(|&(&p, &t)| p == 1 && t == 1)
        .count();
    Ok(Metrics {
        accuracy: correct as f64 / truths.len() as f64,
        precision: (predicted_pos > 0).then(|| true_pos as f64 / predicted_pos as f64),
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

/// Which classifiers vote, with what settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSpec {
    pub classifiers: Vec<ClassifierKind>,
    pub hyperparameters: Hyperparameters,
    /// Vote fraction that must be exceeded for a buy.
    pub threshold: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::REQUIRED.to_vec(),
            hyperparameters: Hyperparameters::default(),
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberMetrics {
    pub classifier: ClassifierKind,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub voting: Metrics,
    pub members: Vec<MemberMetrics>,
}

/// One held-out prediction, enough to recompute every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample: usize,
    pub fold: usize,
    pub truth: u8,
    pub vote_fraction: f64,
    pub predicted: u8,
    /// Member labels in ensemble order.
    pub member_labels: Vec<u8>,
}

/// Per-fold metrics and every held-out prediction of one CV run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<FoldResult>,
    pub predictions: Vec<PredictionRecord>,
}

/// Seed of the models trained for one fold.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed::derive(seed, &format!("fold/{fold}"))
}

/// Trains the ensemble on each training split and votes on its held-out fold.
pub fn run_cv(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    folds: &[Vec<usize>],
    spec: &EnsembleSpec,
    seed: u64,
) -> Result<CvOutcome> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: x.nrows(),
        });
    }
    let mut in_test = vec![usize::MAX; y.len()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            in_test[i] = f;
        }
    }
    let mut results = Vec::with_capacity(folds.len());
    let mut predictions = Vec::with_capacity(y.len());
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..y.len()).filter(|&i| in_test[i] != f).collect();
        let x_train = x.select(Axis(0), &train);
        let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let x_test = x.select(Axis(0), test);
        let y_test: Vec<u8> = test.iter().map(|&i| y[i]).collect();

        let ensemble = train_ensemble(
            &spec.classifiers,
            x_train.view(),
            &y_train,
            fold_seed(seed, f),
            &spec.hyperparameters,
        )?
        .with_threshold(spec.threshold);
        let per_member = ensemble.member_labels(x_test.view())?;
        let votes = votes_from_member_labels(&per_member, spec.threshold);
        let voted: Vec<u8> = votes.iter().map(|v| v.label).collect();

        let members = spec
            .classifiers
            .iter()
            .zip(&per_member)
            .map(|(&classifier, labels)| {
                Ok(MemberMetrics {
                    classifier,
                    metrics: score(labels, &y_test)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let voting = score(&voted, &y_test)?;
        info!("fold {f}: accuracy {:.4}", voting.accuracy);
        for (j, &i) in test.iter().enumerate() {
            predictions.push(PredictionRecord {
                sample: i,
                fold: f,
                truth: y[i],
                vote_fraction: votes[j].vote_fraction,
                predicted: votes[j].label,
                member_labels: per_member.iter().map(|m| m[j]).collect(),
            });
        }
        results.push(FoldResult {
            fold: f,
            n_test: test.len(),
            voting,
            members,
        });
    }
    predictions.sort_by_key(|p| p.sample);
    Ok(CvOutcome {
        folds: results,
        predictions,
    })
}

/// Recomputes the ensemble's per-fold metrics from persisted predictions.
pub fn metrics_from_predictions(predictions: &[PredictionRecord]) -> Result<Vec<Metrics>> {
    let k = predictions.iter().map(|p| p.fold + 1).max().unwrap_or(0);
    (0..k)
        .map(|f| {
            let (pred, truth): (Vec<u8>, Vec<u8>) = predictions
                .iter()
                .filter(|p| p.fold == f)
                .map(|p| (p.predicted, p.truth))
                .unzip();
            score(&pred, &truth)
        })
        .collect()
}

/// The settings that identify a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub rule: RuleKind,
    pub style: Representation,
    /// Image side; `None` for the tabular baseline.
    pub resolution: Option<usize>,
    pub window_days: usize,
    pub seed: u64,
    pub classifiers: Vec<ClassifierKind>,
    pub folds: usize,
    pub n_samples: usize,
    pub label_permutation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub classifier: ClassifierKind,
    pub accuracy: Summary,
    pub precision: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub folds: Vec<FoldResult>,
    pub accuracy: Summary,
    /// Over the folds where precision is defined.
    pub precision: Option<Summary>,
    pub members: Vec<MemberSummary>,
}

fn summarize(metrics: &[Metrics]) -> (Summary, Option<Summary>) {
    let acc: Vec<f64> = metrics.iter().map(|m| m.accuracy).collect();
    let prec: Vec<f64> = metrics.iter().filter_map(|m| m.precision).collect();
    (Summary::of(&acc).expect("at least one fold"), Summary::of(&prec))
}

impl EvalReport {
    pub fn new(config: ReportConfig, folds: Vec<FoldResult>) -> Self {
        let voting: Vec<Metrics> = folds.iter().map(|f| f.voting).collect();
        let (accuracy, precision) = summarize(&voting);
        let members = config
            .classifiers
            .iter()
            .enumerate()
            .map(|(j, &classifier)| {
                let m: Vec<Metrics> = folds.iter().map(|f| f.members[j].metrics).collect();
                let (accuracy, precision) = summarize(&m);
                MemberSummary {
                    classifier,
                    accuracy,
                    precision,
                }
            })
            .collect();
        Self {
            config,
            folds,
            accuracy,
            precision,
            members,
        }
    }
}

/// A finished evaluation with its audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub predictions: Vec<PredictionRecord>,
}

/// How one CV run is set up.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSettings {
    pub spec: EnsembleSpec,
    pub folds: usize,
    pub seed: u64,
    /// Shuffle labels with this seed before splitting (permutation null).
    pub label_permutation: Option<u64>,
}

impl CvSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            spec: EnsembleSpec::default(),
            folds: DEFAULT_FOLDS,
            seed,
            label_permutation: None,
        }
    }
}

/// Labels of a dataset, permuted when the settings ask for it.
pub fn effective_labels(dataset: &Dataset, settings: &CvSettings) -> Vec<u8> {
    let mut y = dataset.labels();
    if let Some(p) = settings.label_permutation {
        y.shuffle(&mut seed::stream(p, "permute"));
    }
    y
}

fn evaluate_with_folds(
    dataset: &Dataset,
    encoding: &Encoding,
    y: &[u8],
    folds: &[Vec<usize>],
    settings: &CvSettings,
) -> Result<Evaluation> {
    info!(
        "{} / {} / {:?}: encoding {} windows",
        dataset.rule,
        encoding.representation,
        encoding.image_side(),
        dataset.len()
    );
    let x = encoding.encode_all(&dataset.samples)?;
    let outcome = run_cv(x.view(), y, folds, &settings.spec, settings.seed)?;
    let config = ReportConfig {
        rule: dataset.rule,
        style: encoding.representation,
        resolution: encoding.image_side(),
        window_days: dataset.window_days,
        seed: settings.seed,
        classifiers: settings.spec.classifiers.clone(),
        folds: folds.len(),
        n_samples: dataset.len(),
        label_permutation: settings.label_permutation,
    };
    Ok(Evaluation {
        report: EvalReport::new(config, outcome.folds),
        predictions: outcome.predictions,
    })
}

/// Encodes a dataset and cross-validates the ensemble on it.
pub fn evaluate_dataset(dataset: &Dataset, encoding: &Encoding, settings: &CvSettings) -> Result<Evaluation> {
    let y = effective_labels(dataset, settings);
    let folds = stratified_kfold(&y, settings.folds, settings.seed)?;
    evaluate_with_folds(dataset, encoding, &y, &folds, settings)
}

/// One evaluation per resolution, all on the same folds.
pub fn resolution_sweep(
    dataset: &Dataset,
    style: RenderStyle,
    resolutions: &[Resolution],
    settings: &CvSettings,
) -> Result<Vec<Evaluation>> {
    let y = effective_labels(dataset, settings);
    let folds = stratified_kfold(&y, settings.folds, settings.seed)?;
    resolutions
        .iter()
        .map(|&r| evaluate_with_folds(dataset, &Encoding::image(style, r), &y, &folds, settings))
        .collect()
}

/// One evaluation per representation, all on the same windows and folds.
pub fn representation_comparison(
    dataset: &Dataset,
    representations: &[Representation],
    resolution: Resolution,
    settings: &CvSettings,
) -> Result<Vec<Evaluation>> {
    let y = effective_labels(dataset, settings);
    let folds = stratified_kfold(&y, settings.folds, settings.seed)?;
    representations
        .iter()
        .map(|&r| evaluate_with_folds(dataset, &Encoding::new(r, resolution), &y, &folds, settings))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|p| p.to_string()).unwrap_or_default()
}

/// Per-fold table: one row for the ensemble and one per member.
pub fn write_results_csv(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in reports {
        let c = &r.config;
        let res = c.resolution.map(|s| s.to_string()).unwrap_or_default();
        for f in &r.folds {
            let rows = std::iter::once((VOTING.to_string(), f.voting))
                .chain(f.members.iter().map(|m| (m.classifier.name().to_string(), m.metrics)));
            for (name, m) in rows {
                w.write_record([
                    c.rule.name(),
                    c.style.name(),
                    &res,
                    &name,
                    &f.fold.to_string(),
                    &m.accuracy.to_string(),
                    &fmt_opt(m.precision),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_predictions_csv(path: impl AsRef<Path>, predictions: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sample", "fold", "truth", "vote_fraction", "predicted", "member_labels"])?;
    for p in predictions {
        let members: String = p.member_labels.iter().map(|l| char::from(b'0' + l)).collect();
        w.write_record([
            p.sample.to_string(),
            p.fold.to_string(),
            p.truth.to_string(),
            p.vote_fraction.to_string(),
            p.predicted.to_string(),
            members,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let bad = |line: u64, reason: &str| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let field = |j: usize| rec.get(j).ok_or_else(|| bad(line, "missing field"));
        let num = |j: usize| -> Result<usize> { field(j)?.parse().map_err(|_| bad(line, "bad integer")) };
        out.push(PredictionRecord {
            sample: num(0)?,
            fold: num(1)?,
            truth: num(2)? as u8,
            vote_fraction: field(3)?.parse().map_err(|_| bad(line, "bad vote fraction"))?,
            predicted: num(4)? as u8,
            member_labels: field(5)?.bytes().map(|b| b - b'0').collect(),
        });
    }
    Ok(out)
}

pub fn write_reports_json(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec_pretty(reports)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

const CHART_W: u32 = 480;
const CHART_H: u32 = 320;

/// Mean accuracy ± one std against log resolution, one line per rule.
pub fn resolution_chart(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let sides: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.config.resolution)
        .map(|s| (s as f64).ln())
        .collect();
    let (lo, hi) = plot::extent(sides);
    let pad = 0.05 * (hi - lo).max(1.0);
    let mut chart = Chart::new(CHART_W, CHART_H, (lo - pad, hi + pad), (0.0, 1.0));
    chart.hline(0.5, plot::LIGHT_GREY);
    for (rule, color) in RuleKind::ALL.into_iter().zip(plot::PALETTE) {
        let mut points: Vec<(f64, f64, f64)> = reports
            .iter()
            .filter(|r| r.config.rule == rule)
            .filter_map(|r| {
                r.config
                    .resolution
                    .map(|s| ((s as f64).ln(), r.accuracy.mean, r.accuracy.std))
            })
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let line: Vec<(f64, Option<f64>)> = points.iter().map(|&(x, m, _)| (x, Some(m))).collect();
        chart.line(&line, color);
        for &(x, m, s) in &points {
            chart.error_bar(x, (m - s).max(0.0), (m + s).min(1.0), plot::BLACK);
            chart.square(x, m, 2, color);
        }
    }
    chart.save(path)
}

/// Grouped bars of mean accuracy ± one std: one group per rule, one bar per
/// representation.
pub fn representation_chart(path: impl AsRef<Path>, reports: &[EvalReport]) -> Result<()> {
    let reps = Representation::all();
    let group = reps.len() as f64 + 1.0;
    let mut chart = Chart::new(CHART_W, CHART_H, (0.0, group * RuleKind::ALL.len() as f64), (0.0, 1.0));
    for (g, rule) in RuleKind::ALL.into_iter().enumerate() {
        for (j, rep) in reps.iter().enumerate() {
            let Some(r) = reports.iter().find(|r| r.config.rule == rule && r.config.style == *rep) else {
                continue;
            };
            let x = g as f64 * group + j as f64 + 1.0;
            let color = if *rep == Representation::Tabular {
                plot::GREY
            } else {
                plot::PALETTE[j]
            };
            chart.bar(x, 0.8, 0.0, r.accuracy.mean, color);
            let (m, s) = (r.accuracy.mean, r.accuracy.std);
            chart.error_bar(x, (m - s).max(0.0), (m + s).min(1.0), plot::BLACK);
        }
    }
    chart.hline(0.5, plot::LIGHT_GREY);
    chart.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn balanced_folds_split_evenly() {
        let labels: Vec<u8> = (0..10_000).map(|i| (i % 2) as u8).collect();
        let folds = stratified_kfold(&labels, 5, 1).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 2000);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 1000);
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10_000).collect::<Vec<_>>());
        assert_eq!(folds, stratified_kfold(&labels, 5, 1).unwrap());
        assert_ne!(folds, stratified_kfold(&labels, 5, 2).unwrap());
    }

    #[test]
    fn proportions_stay_within_one_sample() {
        let labels: Vec<u8> = (0..103).map(|i| u8::from(i % 3 == 0)).collect();
        let folds = stratified_kfold(&labels, 5, 0).unwrap();
        let pos: Vec<usize> = folds
            .iter()
            .map(|f| f.iter().filter(|&&i| labels[i] == 1).count())
            .collect();
        let neg: Vec<usize> = folds.iter().map(|f| f.len()).zip(&pos).map(|(n, p)| n - p).collect();
        assert!(pos.iter().max().unwrap() - pos.iter().min().unwrap() <= 1);
        assert!(neg.iter().max().unwrap() - neg.iter().min().unwrap() <= 1);
    }

    #[test]
    fn leave_one_out_degenerates() {
        let labels = [0u8, 1, 0, 1, 0, 1];
        let folds = stratified_kfold(&labels, 6, 3).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
        assert!(matches!(
            stratified_kfold(&[0, 0, 0, 0, 0, 1, 1], 5, 0),
            Err(Error::ClassTooSmall {
                class: 1,
                count: 2,
                folds: 5
            })
        ));
    }

    #[test]
    fn score_examples() {
        assert_eq!(
            score(&[1, 0, 1], &[1, 0, 1]).unwrap(),
            Metrics {
                accuracy: 1.0,
                precision: Some(1.0)
            }
        );
        let m = score(&[0, 0, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.precision, None);
        assert_eq!(
            score(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap(),
            Metrics {
                accuracy: 0.5,
                precision: Some(0.5)
            }
        );
        assert!(score(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn summary_uses_population_std() {
        let s = Summary::of(&[0.8, 0.9, 1.0, 0.7, 0.6]).unwrap();
        assert!((s.mean - 0.8).abs() < 1e-12);
        assert!((s.std - 0.02f64.sqrt()).abs() < 1e-12);
    }

    fn pixel_data(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = crate::seed::rng(seed);
        let x = Array2::from_shape_fn((n, 25), |(_, j)| {
            let u: f64 = rand::Rng::random(&mut rng);
            if j == 12 && rand::Rng::random_bool(&mut rng, 0.5) {
                1.0 - 0.1 * u
            } else {
                0.1 * u
            }
        });
        let y = (0..n).map(|i| u8::from(x[[i, 12]] > 0.5)).collect();
        (x, y)
    }

    fn quick_spec() -> EnsembleSpec {
        let mut spec = EnsembleSpec::default();
        spec.hyperparameters.forest.n_trees = 10;
        spec.hyperparameters.mlp.epochs = 10;
        spec
    }

    #[test]
    fn oracle_pixel_is_recovered_and_predictions_audit() {
        let (x, y) = pixel_data(200, 4);
        let folds = stratified_kfold(&y, 5, 0).unwrap();
        let out = run_cv(x.view(), &y, &folds, &quick_spec(), 0).unwrap();
        let config = ReportConfig {
            rule: RuleKind::Bb,
            style: Representation::Image(RenderStyle::CandleOhlc),
            resolution: Some(5),
            window_days: 20,
            seed: 0,
            classifiers: quick_spec().classifiers,
            folds: 5,
            n_samples: 200,
            label_permutation: None,
        };
        let report = EvalReport::new(config, out.folds.clone());
        assert!(report.accuracy.mean >= 0.99, "{}", report.accuracy.mean);
        let recomputed = metrics_from_predictions(&out.predictions).unwrap();
        let stored: Vec<Metrics> = out.folds.iter().map(|f| f.voting).collect();
        assert_eq!(recomputed, stored);
        let accs: Vec<f64> = stored.iter().map(|m| m.accuracy).collect();
        assert_eq!(Summary::of(&accs).unwrap(), report.accuracy);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        write_predictions_csv(&p, &out.predictions).unwrap();
        assert_eq!(read_predictions_csv(&p).unwrap(), out.predictions);
        let csv = dir.path().join("results.csv");
        write_results_csv(&csv, &[report]).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("rule,style,resolution,classifier,fold,accuracy,precision\n"));
        assert_eq!(text.lines().count(), 1 + 5 * 7);
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        let (x, _) = pixel_data(400, 5);
        let mut y: Vec<u8> = (0..400).map(|i| (i % 2) as u8).collect();
        y.shuffle(&mut crate::seed::rng(8));
        let folds = stratified_kfold(&y, 5, 0).unwrap();
        let out = run_cv(x.view(), &y, &folds, &quick_spec(), 0).unwrap();
        let acc: Vec<f64> = out.folds.iter().map(|f| f.voting.accuracy).collect();
        let mean = Summary::of(&acc).unwrap().mean;
        // 3 binomial standard deviations at n = 400.
        assert!((mean - 0.5).abs() <= 3.0 * 0.025, "{mean}");
    }
}
