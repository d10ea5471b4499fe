//! Featurization, the classifier registry and hard voting.
//!
//! Every model produces a score in `[0, 1]` (an estimate of P(buy)); its
//! hard label is `score >= 0.5`. An ensemble votes with hard labels only.

mod boost;
mod knn;
mod logistic;
mod mlp;
mod naive_bayes;
mod svm;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::WindowSample;
use crate::raster::RasterImage;
use crate::seed;

pub use boost::{AdaBoost, BoostParams};
pub use knn::{KNearest, KnnParams};
pub use logistic::{LogisticParams, LogisticRegression};
pub use mlp::{Mlp, MlpParams};
pub use naive_bayes::{GaussianNb, NaiveBayesParams};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, ForestParams, MaxFeatures, TreeEnsemble, TreeParams};

/// Version written into every model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Row-major pixel intensities of a (downscaled) image.
    ImagePixels,
    /// Open, high, low, close per day, z-normalized within the window.
    RawTabular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub mode: FeatureMode,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// What [`featurize`] reads.
#[derive(Debug, Clone, Copy)]
pub enum FeatureSource<'a> {
    Image(&'a RasterImage),
    Window(&'a WindowSample),
}

pub fn featurize(source: FeatureSource<'_>) -> FeatureVector {
    match source {
        FeatureSource::Image(img) => FeatureVector {
            values: img.pixels.iter().map(|&p| f64::from(p)).collect(),
            mode: FeatureMode::ImagePixels,
        },
        FeatureSource::Window(w) => FeatureVector {
            values: tabular_features(w),
            mode: FeatureMode::RawTabular,
        },
    }
}

fn tabular_features(window: &WindowSample) -> Vec<f64> {
    let raw: Vec<f64> = window
        .bars
        .iter()
        .flat_map(|b| [b.open, b.high, b.low, b.close])
        .collect();
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        raw.iter().map(|x| (x - mean) / sd).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

/// Stacks feature vectors into a sample-by-feature matrix; every vector must
/// have the same length and mode.
pub fn stack_features(vectors: &[FeatureVector]) -> Result<Array2<f64>> {
    let Some(first) = vectors.first() else {
        return Ok(Array2::zeros((0, 0)));
    };
    let d = first.len();
    for v in vectors {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
        if v.mode != first.mode {
            return Err(Error::InvalidParameter("mixed feature modes in one dataset".into()));
        }
    }
    let flat: Vec<f64> = vectors.iter().flat_map(|v| v.values.iter().copied()).collect();
    Ok(Array2::from_shape_vec((vectors.len(), d), flat).expect("shape checked"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    GaussianNaiveBayes,
    KNearestNeighbors,
    DecisionTree,
    RandomForest,
    Mlp,
    ExtraTrees,
    AdaBoost,
    Bagging,
    LinearSvm,
    GradientBoosting,
    RbfSvm,
    Lda,
    Qda,
    GaussianProcess,
    Cnn,
}

impl ClassifierKind {
    /// The six members of the default voting ensemble.
    pub const REQUIRED: [ClassifierKind; 6] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::GaussianNaiveBayes,
        ClassifierKind::KNearestNeighbors,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
    ];

    pub const ALL: [ClassifierKind; 16] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::GaussianNaiveBayes,
        ClassifierKind::KNearestNeighbors,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
        ClassifierKind::ExtraTrees,
        ClassifierKind::AdaBoost,
        ClassifierKind::Bagging,
        ClassifierKind::LinearSvm,
        ClassifierKind::GradientBoosting,
        ClassifierKind::RbfSvm,
        ClassifierKind::Lda,
        ClassifierKind::Qda,
        ClassifierKind::GaussianProcess,
        ClassifierKind::Cnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::GaussianNaiveBayes => "gaussian_naive_bayes",
            ClassifierKind::KNearestNeighbors => "k_nearest_neighbors",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::ExtraTrees => "extra_trees",
            ClassifierKind::AdaBoost => "ada_boost",
            ClassifierKind::Bagging => "bagging",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::GradientBoosting => "gradient_boosting",
            ClassifierKind::RbfSvm => "rbf_svm",
            ClassifierKind::Lda => "lda",
            ClassifierKind::Qda => "qda",
            ClassifierKind::GaussianProcess => "gaussian_process",
            ClassifierKind::Cnn => "cnn",
        }
    }

    /// Whether [`train`] can fit this kind.
    pub fn is_available(self) -> bool {
        !matches!(
            self,
            ClassifierKind::GradientBoosting
                | ClassifierKind::RbfSvm
                | ClassifierKind::Lda
                | ClassifierKind::Qda
                | ClassifierKind::GaussianProcess
                | ClassifierKind::Cnn
        )
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "lr" | "logistic" => Some(ClassifierKind::LogisticRegression),
            "gnb" | "naive_bayes" => Some(ClassifierKind::GaussianNaiveBayes),
            "knn" => Some(ClassifierKind::KNearestNeighbors),
            "dt" | "tree" => Some(ClassifierKind::DecisionTree),
            "rf" | "forest" => Some(ClassifierKind::RandomForest),
            _ => None,
        };
        alias
            .or_else(|| ClassifierKind::ALL.into_iter().find(|k| k.name() == norm))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown classifier `{s}`")))
    }
}

/// Hyperparameters of every registry entry. Defaults are used unless a run
/// configuration overrides them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub logistic: LogisticParams,
    pub naive_bayes: NaiveBayesParams,
    pub knn: KnnParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub mlp: MlpParams,
    pub boost: BoostParams,
    pub svm: SvmParams,
}

/// Learned parameters, one variant per fitted kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticRegression),
    NaiveBayes(GaussianNb),
    Knn(KNearest),
    Tree(DecisionTree),
    Trees(TreeEnsemble),
    Mlp(Mlp),
    AdaBoost(AdaBoost),
    LinearSvm(LinearSvm),
}

impl ModelParams {
    fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        match self {
            ModelParams::Logistic(m) => m.score_batch(x),
            ModelParams::NaiveBayes(m) => m.score_batch(x),
            ModelParams::Knn(m) => m.score_batch(x),
            ModelParams::Tree(m) => x.rows().into_iter().map(|r| m.score(r)).collect(),
            ModelParams::Trees(m) => m.score_batch(x),
            ModelParams::Mlp(m) => m.score_batch(x),
            ModelParams::AdaBoost(m) => x.rows().into_iter().map(|r| m.score(r)).collect(),
            ModelParams::LinearSvm(m) => m.score_batch(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub feature_mode: Option<FeatureMode>,
    pub resolution: Option<usize>,
    pub n_features: usize,
    pub n_samples: usize,
}

/// A fitted, serializable classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub kind: ClassifierKind,
    pub meta: TrainingMeta,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

impl Prediction {
    fn from_score(score: f64) -> Self {
        let score = if score.is_nan() { 0.5 } else { score.clamp(0.0, 1.0) };
        Self {
            label: u8::from(score >= 0.5),
            score,
        }
    }
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.meta.n_features
    }

    pub fn with_provenance(mut self, mode: FeatureMode, resolution: Option<usize>) -> Self {
        self.meta.feature_mode = Some(mode);
        self.meta.resolution = resolution;
        self
    }

    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Prediction>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        Ok(self
            .params
            .score_batch(x)
            .into_iter()
            .map(Prediction::from_score)
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_slice(&bytes)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(model.version));
        }
        Ok(model)
    }
}

fn check_training_data(x: ArrayView2<'_, f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    let negatives = y.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::InsufficientClasses {
            required: 2,
            negatives,
            positives,
        });
    }
    Ok(())
}

/// Fits one classifier. Deterministic given `(x, y, seed, hyperparameters)`.
pub fn train(
    kind: ClassifierKind,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    seed: u64,
    hp: &Hyperparameters,
) -> Result<TrainedModel> {
    check_training_data(x, y)?;
    let mut rng = seed::rng(seed);
    let params = match kind {
        ClassifierKind::LogisticRegression => ModelParams::Logistic(LogisticRegression::fit(x, y, &hp.logistic)),
        ClassifierKind::GaussianNaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(x, y, &hp.naive_bayes)),
        ClassifierKind::KNearestNeighbors => ModelParams::Knn(KNearest::fit(x, y, &hp.knn)?),
        ClassifierKind::DecisionTree => ModelParams::Tree(DecisionTree::fit(x, y, &hp.tree, &mut rng)),
        ClassifierKind::RandomForest => {
            ModelParams::Trees(TreeEnsemble::random_forest(x, y, &hp.forest, &hp.tree, seed))
        }
        ClassifierKind::ExtraTrees => ModelParams::Trees(TreeEnsemble::extra_trees(x, y, &hp.forest, &hp.tree, seed)),
        ClassifierKind::Bagging => ModelParams::Trees(TreeEnsemble::bagging(x, y, &hp.tree, seed)),
        ClassifierKind::Mlp => ModelParams::Mlp(Mlp::fit(x, y, &hp.mlp, &mut rng)),
        ClassifierKind::AdaBoost => ModelParams::AdaBoost(AdaBoost::fit(x, y, &hp.boost)),
        ClassifierKind::LinearSvm => ModelParams::LinearSvm(LinearSvm::fit(x, y, &hp.svm, &mut rng)),
        other => return Err(Error::UnsupportedClassifier(other.name().to_string())),
    };
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        kind,
        meta: TrainingMeta {
            seed,
            hyperparameters: hp.clone(),
            feature_mode: None,
            resolution: None,
            n_features: x.ncols(),
            n_samples: x.nrows(),
        },
        params,
    })
}

pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Result<Prediction> {
    let view = ArrayView2::from_shape((1, x.len()), &x.values).expect("single row");
    Ok(model.predict_batch(view)?[0])
}

/// Hard-voting ensemble. A sample is a buy when the fraction of members
/// voting buy strictly exceeds `threshold` (0.5 = strict majority, ties are
/// no-buy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    pub members: Vec<TrainedModel>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub label: u8,
    pub vote_fraction: f64,
}

impl VoteOutcome {
    pub fn from_labels(labels: &[u8], threshold: f64) -> Self {
        let positives = labels.iter().filter(|&&l| l == 1).count();
        let vote_fraction = positives as f64 / labels.len() as f64;
        Self {
            label: u8::from(vote_fraction > threshold),
            vote_fraction,
        }
    }
}

impl VotingEnsemble {
    pub fn new(members: Vec<TrainedModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter(
                "voting ensemble needs at least one member".into(),
            ));
        }
        let d = members[0].n_features();
        if let Some(m) = members.iter().find(|m| m.n_features() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: m.n_features(),
            });
        }
        Ok(Self {
            members,
            threshold: 0.5,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    /// Per-member hard labels: `labels[member][sample]`.
    pub fn member_labels(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Vec<u8>>> {
        self.members
            .iter()
            .map(|m| Ok(m.predict_batch(x)?.into_iter().map(|p| p.label).collect()))
            .collect()
    }

    pub fn vote_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<VoteOutcome>> {
        let per_member = self.member_labels(x)?;
        Ok(votes_from_member_labels(&per_member, self.threshold))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let ens: Self = serde_json::from_slice(&bytes)?;
        if let Some(m) = ens.members.iter().find(|m| m.version != MODEL_FORMAT_VERSION) {
            return Err(Error::ModelVersion(m.version));
        }
        Ok(ens)
    }
}

pub fn votes_from_member_labels(per_member: &[Vec<u8>], threshold: f64) -> Vec<VoteOutcome> {
    let n = per_member.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let labels: Vec<u8> = per_member.iter().map(|m| m[i]).collect();
            VoteOutcome::from_labels(&labels, threshold)
        })
        .collect()
}

pub fn hard_vote(ensemble: &VotingEnsemble, x: &FeatureVector) -> Result<VoteOutcome> {
    let view = ArrayView2::from_shape((1, x.len()), &x.values).expect("single row");
    Ok(ensemble.vote_batch(view)?[0])
}

/// Seed of one ensemble member, derived from the global seed and its kind.
pub fn member_seed(seed: u64, kind: ClassifierKind) -> u64 {
    seed::derive(seed, kind.name())
}

/// Trains every kind on the same data, each with its own derived seed.
pub fn train_ensemble(
    kinds: &[ClassifierKind],
    x: ArrayView2<'_, f64>,
    y: &[u8],
    seed: u64,
    hp: &Hyperparameters,
) -> Result<VotingEnsemble> {
    let members = kinds
        .par_iter()
        .map(|&k| train(k, x, y, member_seed(seed, k), hp))
        .collect::<Result<Vec<_>>>()?;
    VotingEnsemble::new(members)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
