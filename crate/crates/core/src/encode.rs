//! Window → feature vector: render, downscale, flatten (or the tabular
//! baseline, which skips the image entirely).

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{featurize, FeatureMode, FeatureSource, FeatureVector};
use crate::error::{Error, Result};
use crate::labeler::WindowSample;
use crate::raster::{render, RasterImage, RenderStyle, NATIVE_SIDE};
use crate::resample::{downscale, Resolution};

/// One input representation of a window. Serialized by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Representation {
    Image(RenderStyle),
    /// Z-normalized OHLC values, no rendering.
    Tabular,
}

impl Representation {
    /// The five chart styles followed by the tabular baseline.
    pub fn all() -> Vec<Representation> {
        RenderStyle::ALL
            .into_iter()
            .map(Representation::Image)
            .chain([Representation::Tabular])
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::Image(s) => s.name(),
            Representation::Tabular => "tabular",
        }
    }

    pub fn style(self) -> Option<RenderStyle> {
        match self {
            Representation::Image(s) => Some(s),
            Representation::Tabular => None,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("tabular") || s.eq_ignore_ascii_case("raw") {
            return Ok(Representation::Tabular);
        }
        s.parse().map(Representation::Image)
    }
}

impl From<Representation> for String {
    fn from(r: Representation) -> String {
        r.name().to_string()
    }
}

impl TryFrom<String> for Representation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Everything needed to turn a window into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub representation: Representation,
    /// Side of the square render canvas before downscaling.
    pub canvas: usize,
    pub resolution: Resolution,
}

impl Encoding {
    pub fn image(style: RenderStyle, resolution: Resolution) -> Self {
        Self {
            representation: Representation::Image(style),
            canvas: NATIVE_SIDE,
            resolution,
        }
    }

    pub fn tabular() -> Self {
        Self {
            representation: Representation::Tabular,
            canvas: NATIVE_SIDE,
            resolution: Resolution::new(NATIVE_SIDE).expect("valid side"),
        }
    }

    pub fn new(representation: Representation, resolution: Resolution) -> Self {
        match representation {
            Representation::Image(style) => Self::image(style, resolution),
            Representation::Tabular => Self::tabular(),
        }
    }

    pub fn feature_mode(&self) -> FeatureMode {
        match self.representation {
            Representation::Image(_) => FeatureMode::ImagePixels,
            Representation::Tabular => FeatureMode::RawTabular,
        }
    }

    /// Resolution recorded in model metadata; `None` for the tabular baseline.
    pub fn image_side(&self) -> Option<usize> {
        self.representation.style().map(|_| self.resolution.side())
    }

    /// The downscaled image of a window. Errors for the tabular baseline.
    pub fn image_of(&self, window: &WindowSample) -> Result<RasterImage> {
        let Representation::Image(style) = self.representation else {
            return Err(Error::InvalidParameter("tabular encoding has no image".into()));
        };
        let native = render(window, style, self.canvas, self.canvas);
        downscale(&native, self.resolution)
    }

    pub fn encode(&self, window: &WindowSample) -> Result<FeatureVector> {
        match self.representation {
            Representation::Image(_) => Ok(featurize(FeatureSource::Image(&self.image_of(window)?))),
            Representation::Tabular => Ok(featurize(FeatureSource::Window(window))),
        }
    }

    /// Encodes many windows into a sample-by-feature matrix, in input order.
    pub fn encode_all(&self, windows: &[WindowSample]) -> Result<Array2<f64>> {
        let rows: Vec<FeatureVector> = windows.par_iter().map(|w| self.encode(w)).collect::<Result<_>>()?;
        crate::classify::stack_features(&rows)
    }
}
