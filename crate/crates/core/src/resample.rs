//! Separable Lanczos-3 downscaling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const LANCZOS_LOBES: usize = 3;

/// Default resolution sweep, roughly logarithmic.
pub const SWEEP_SIDES: [usize; 7] = [5, 8, 13, 21, 30, 50, 80];

/// Square target resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Resolution(usize);

impl Resolution {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParameter(format!(
                "resolution side must be at least 2, got {side}"
            )));
        }
        Ok(Self(side))
    }

    pub fn side(self) -> usize {
        self.0
    }

    pub fn pixels(self) -> usize {
        self.0 * self.0
    }
}

impl TryFrom<usize> for Resolution {
    type Error = Error;

    fn try_from(side: usize) -> Result<Self> {
        Self::new(side)
    }
}

impl From<Resolution> for usize {
    fn from(r: Resolution) -> usize {
        r.0
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `sinc(x)·sinc(x/a)` inside `|x| < a`, zero outside.
pub fn lanczos_kernel(x: f64, lobes: usize) -> f64 {
    assert!(lobes >= 1, "lanczos needs at least one lobe");
    let a = lobes as f64;
    if x == 0.0 {
        1.0
    } else if x.abs() < a {
        sinc(x) * sinc(x / a)
    } else {
        0.0
    }
}

/// Normalized taps for one output sample: (source index, weight).
type Taps = Vec<(usize, f64)>;

/// Per-output-sample taps for resampling `src` samples to `dst`. When
/// minifying, the kernel is stretched by the scale factor; out-of-range
/// source indices are clamped to the edge.
fn axis_taps(src: usize, dst: usize) -> Vec<Taps> {
    let ratio = src as f64 / dst as f64;
    let scale = ratio.max(1.0);
    let support = LANCZOS_LOBES as f64 * scale;
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) * ratio - 0.5;
            let lo = (center - support).floor() as i64;
            let hi = (center + support).ceil() as i64;
            let mut taps: Taps = Vec::with_capacity((hi - lo + 1) as usize);
            for j in lo..=hi {
                let w = lanczos_kernel((j as f64 - center) / scale, LANCZOS_LOBES);
                if w != 0.0 {
                    let idx = j.clamp(0, src as i64 - 1) as usize;
                    taps.push((idx, w));
                }
            }
            let sum: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= sum;
            }
            taps
        })
        .collect()
}

/// Downscales to `target × target` without clamping (linear in the input).
pub fn downscale_unclamped(image: &RasterImage, target: Resolution) -> Result<Vec<f64>> {
    let side = target.side();
    if side > image.width || side > image.height {
        return Err(Error::Upscale {
            source_side: image.width.min(image.height),
            target_side: side,
        });
    }
    let (w, h) = (image.width, image.height);
    if side == w && side == h {
        return Ok(image.pixels.iter().map(|&p| f64::from(p)).collect());
    }

    let xt = axis_taps(w, side);
    let mut horiz = vec![0.0f64; h * side];
    for r in 0..h {
        let row = &image.pixels[r * w..(r + 1) * w];
        for (c, taps) in xt.iter().enumerate() {
            horiz[r * side + c] = taps.iter().map(|&(j, wt)| wt * f64::from(row[j])).sum();
        }
    }

    let yt = axis_taps(h, side);
    let mut out = vec![0.0f64; side * side];
    for (r, taps) in yt.iter().enumerate() {
        let dst = &mut out[r * side..(r + 1) * side];
        for &(j, wt) in taps {
            let src = &horiz[j * side..(j + 1) * side];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += wt * s;
            }
        }
    }
    Ok(out)
}

/// Lanczos-3 downscale, horizontal pass then vertical, clamped to `[0, 1]`
/// after both passes. Equal size returns the image unchanged.
pub fn downscale(image: &RasterImage, target: Resolution) -> Result<RasterImage> {
    let side = target.side();
    if side == image.width && side == image.height {
        return Ok(image.clone());
    }
    let values = downscale_unclamped(image, target)?;
    Ok(RasterImage {
        width: side,
        height: side,
        pixels: values.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect(),
        meta: image.meta.clone(),
    })
}
