//! Trading-signal recovery from rendered price charts.
//!
//! The pipeline labels OHLCV windows with technical-indicator buy rules
//! (Bollinger Bands, MACD, RSI), renders each window as a grayscale
//! candlestick or line image, downscales it with a Lanczos filter and trains
//! a hard-voting ensemble of classifiers on the pixels.
//!
//! Modules follow the pipeline order:
//!
//! - [`market`]: OHLCV bars, CSV ingestion, synthetic geometric random walks.
//! - [`indicators`]: SMA, rolling σ, EMA, Bollinger Bands, MACD, RSI, crossings.
//! - [`labeler`]: buy-signal detection, window extraction, balanced sampling.
//! - [`raster`]: the five chart styles and image persistence.
//! - [`resample`]: Lanczos-3 downscaling.
//! - [`classify`]: featurization, the classifier registry and hard voting.
//! - [`evaluate`]: stratified k-fold CV, resolution sweeps, style comparisons.
//! - [`forecast`]: rolling out-of-sample prediction and signal charts.

pub mod classify;
pub mod encode;
pub mod error;
pub mod evaluate;
pub mod forecast;
pub mod indicators;
pub mod labeler;
pub mod market;
pub mod plot;
pub mod raster;
pub mod resample;
pub mod seed;

pub use classify::{
    featurize, hard_vote, predict, train, ClassifierKind, FeatureMode, FeatureVector, Hyperparameters, Prediction,
    TrainedModel, VoteOutcome, VotingEnsemble,
};
pub use encode::{Encoding, Representation};
pub use error::{Error, Result};
pub use evaluate::{EvalReport, Metrics};
pub use forecast::ForecastRecord;
pub use indicators::{BollingerBands, IndicatorSeries, MacdLines, RsiSeries};
pub use labeler::{Dataset, RuleKind, SamplingConfig, SignalEvent, WindowSample};
pub use market::{OhlcvBar, PriceSeries, SyntheticModel};
pub use raster::{RasterImage, RenderStyle};
pub use resample::Resolution;
