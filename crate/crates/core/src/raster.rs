//! Tightly cropped grayscale chart rendering.
//!
//! Pixels hold ink intensity: 1.0 is black ink, 0.0 is white background.
//! The canvas is split into one equal-width slot per day; prices map
//! affinely onto rows with the window's highest high on row 0 and its lowest
//! low on the last row. A pixel is ink when its center lies inside a shape;
//! rectangle bounds are rounded half away from zero.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::{RuleKind, WindowSample};
use crate::market::OhlcvBar;

/// Default native render size.
pub const NATIVE_SIDE: usize = 240;
/// Body width of a regular candle as a fraction of its slot.
pub const BODY_FRACTION: f64 = 0.8;
/// Narrowest body of the width-encoded styles, as a fraction of the slot.
pub const MIN_BODY_FRACTION: f64 = 0.2;
/// Half of the close-line stroke width, in pixels.
const LINE_HALF_WIDTH: f64 = 1.0;

/// Magic bytes of the raw `f32` image format.
pub const RAW_MAGIC: &[u8; 4] = b"RIMG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStyle {
    /// Box between open and close, whiskers to high and low.
    CandleOhlc,
    /// Closes only, as a 2-px polyline.
    CloseLine,
    /// Candles whose body widens linearly from left to right.
    CandleTimeWidth,
    /// Candles with the previous day's close overlaid as a horizontal tick.
    CandlePrevClose,
    /// Candles whose body width encodes volume within the window.
    CandleVolumeWidth,
}

impl RenderStyle {
    pub const ALL: [RenderStyle; 5] = [
        RenderStyle::CandleOhlc,
        RenderStyle::CloseLine,
        RenderStyle::CandleTimeWidth,
        RenderStyle::CandlePrevClose,
        RenderStyle::CandleVolumeWidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenderStyle::CandleOhlc => "candle_ohlc",
            RenderStyle::CloseLine => "close_line",
            RenderStyle::CandleTimeWidth => "candle_time_width",
            RenderStyle::CandlePrevClose => "candle_prev_close",
            RenderStyle::CandleVolumeWidth => "candle_volume_width",
        }
    }

    pub fn is_candlestick(self) -> bool {
        self != RenderStyle::CloseLine
    }
}

impl fmt::Display for RenderStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        RenderStyle::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown style `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub style: RenderStyle,
    pub rule: RuleKind,
    pub ticker: String,
    pub end_date: NaiveDate,
}

/// Row-major grayscale grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
    pub meta: Option<ImageMeta>,
}

impl RasterImage {
    pub fn blank(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
            meta: None,
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut img = Self::blank(width, height);
        for r in 0..height {
            for c in 0..width {
                img.pixels[r * width + c] = f(c, r);
            }
        }
        img
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    fn set(&mut self, col: usize, row: usize, v: f32) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn is_ink(&self, col: usize, row: usize) -> bool {
        self.get(col, row) > 0.5
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| f64::from(p)).sum::<f64>() / self.pixels.len() as f64
    }

    /// Inclusive rectangle fill, clipped to the canvas.
    fn fill(&mut self, cols: std::ops::Range<usize>, rows: std::ops::RangeInclusive<usize>, v: f32) {
        let col_end = cols.end.min(self.width);
        let row_end = (*rows.end()).min(self.height - 1);
        for r in *rows.start()..=row_end {
            for c in cols.start..col_end {
                self.set(c, r, v);
            }
        }
    }

    /// 8-bit grayscale PNG with ink at luminance 0 and background at 255.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let img = GrayImage::from_fn(self.width as u32, self.height as u32, |c, r| {
            let ink = self.get(c as usize, r as usize).clamp(0.0, 1.0);
            Luma([(255.0 * (1.0 - ink)).round() as u8])
        });
        img.save(path.as_ref())?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.into_luma8();
        let (w, h) = img.dimensions();
        Ok(Self {
            width: w as usize,
            height: h as usize,
            pixels: img.pixels().map(|p| 1.0 - f32::from(p.0[0]) / 255.0).collect(),
            meta: None,
        })
    }

    /// Raw format: `RIMG`, width and height as little-endian `u32`, then
    /// `width·height` little-endian `f32` values in row-major order.
    pub fn save_raw(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(12 + 4 * self.pixels.len());
        buf.extend_from_slice(RAW_MAGIC);
        buf.extend_from_slice(&(self.width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.height as u32).to_le_bytes());
        for p in &self.pixels {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    pub fn load_raw(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        if buf.len() < 12 || &buf[..4] != RAW_MAGIC {
            return Err(Error::RawImage(format!("{}: missing RIMG header", path.display())));
        }
        let word = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().expect("4 bytes")) as usize;
        let (width, height) = (word(4), word(8));
        let payload = &buf[12..];
        if payload.len() != 4 * width * height {
            return Err(Error::RawImage(format!(
                "{}: expected {} payload bytes for {width}x{height}, found {}",
                path.display(),
                4 * width * height,
                payload.len()
            )));
        }
        let pixels = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
            meta: None,
        })
    }
}

/// Column geometry and price-to-row mapping of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub width: usize,
    pub height: usize,
    pub days: usize,
    pub slot_width: f64,
    pub price_max: f64,
    pub price_min: f64,
}

impl Layout {
    pub fn new(bars: &[OhlcvBar], width: usize, height: usize) -> Self {
        assert!(!bars.is_empty(), "layout needs at least one bar");
        assert!(width >= 8 && height >= 8, "canvas must be at least 8x8");
        let price_max = bars.iter().map(|b| b.high).fold(f64::NEG_INFINITY, f64::max);
        let price_min = bars.iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
        Self {
            width,
            height,
            days: bars.len(),
            slot_width: width as f64 / bars.len() as f64,
            price_max,
            price_min,
        }
    }

    /// Row of a price: `price_max` maps to 0 and `price_min` to `height − 1`.
    /// A flat window maps every price to the middle row.
    pub fn row(&self, price: f64) -> usize {
        let last = (self.height - 1) as f64;
        let range = self.price_max - self.price_min;
        let y = if range > 0.0 {
            (self.price_max - price) / range * last
        } else {
            last / 2.0
        };
        (y.round().max(0.0) as usize).min(self.height - 1)
    }

    pub fn slot_left(&self, day: usize) -> f64 {
        day as f64 * self.slot_width
    }

    pub fn slot_center(&self, day: usize) -> f64 {
        (day as f64 + 0.5) * self.slot_width
    }

    /// Pixel columns covered by the whole slot.
    pub fn slot_columns(&self, day: usize) -> std::ops::Range<usize> {
        let a = round_col(self.slot_left(day));
        let b = round_col(self.slot_left(day + 1)).min(self.width);
        a..b.max(a + 1)
    }

    /// Column of the 1-px wick.
    pub fn wick_column(&self, day: usize) -> usize {
        (self.slot_center(day).floor() as usize).min(self.width - 1)
    }

    /// Pixel columns of a body spanning `fraction` of the slot, centered in it.
    pub fn body_columns(&self, day: usize, fraction: f64) -> std::ops::Range<usize> {
        let half = 0.5 * fraction * self.slot_width;
        let c = self.slot_center(day);
        let a = round_col(c - half);
        let b = round_col(c + half).min(self.width);
        if b > a {
            a..b
        } else {
            let a = a.min(self.width - 1);
            a..a + 1
        }
    }
}

fn round_col(x: f64) -> usize {
    x.round().max(0.0) as usize
}

pub fn layout(window: &WindowSample, width: usize, height: usize) -> Layout {
    Layout::new(&window.bars, width, height)
}

/// Renders a labeled window; the image carries the window's metadata.
pub fn render(window: &WindowSample, style: RenderStyle, width: usize, height: usize) -> RasterImage {
    let mut img = render_bars(&window.bars, style, width, height);
    img.meta = Some(ImageMeta {
        style,
        rule: window.rule,
        ticker: window.ticker.clone(),
        end_date: window.end_date,
    });
    img
}

pub fn render_bars(bars: &[OhlcvBar], style: RenderStyle, width: usize, height: usize) -> RasterImage {
    let lay = Layout::new(bars, width, height);
    let mut img = RasterImage::blank(width, height);
    match style {
        RenderStyle::CloseLine => draw_close_line(&mut img, &lay, bars),
        RenderStyle::CandleOhlc => draw_candles(&mut img, &lay, bars, |_| BODY_FRACTION),
        RenderStyle::CandleTimeWidth => {
            let n = bars.len();
            draw_candles(&mut img, &lay, bars, |i| {
                if n == 1 {
                    1.0
                } else {
                    MIN_BODY_FRACTION + (1.0 - MIN_BODY_FRACTION) * i as f64 / (n - 1) as f64
                }
            })
        }
        RenderStyle::CandlePrevClose => {
            draw_candles(&mut img, &lay, bars, |_| BODY_FRACTION);
            for i in 1..bars.len() {
                let row = lay.row(bars[i - 1].close);
                img.fill(lay.slot_columns(i), row..=row, 1.0);
            }
        }
        RenderStyle::CandleVolumeWidth => {
            let fractions = volume_fractions(bars);
            draw_candles(&mut img, &lay, bars, |i| fractions[i]);
        }
    }
    img
}

/// Within-window min-max scaled volume mapped onto `[0.2, 1.0]` of the slot.
pub fn volume_fractions(bars: &[OhlcvBar]) -> Vec<f64> {
    let vmin = bars.iter().map(|b| b.volume).fold(f64::INFINITY, f64::min);
    let vmax = bars.iter().map(|b| b.volume).fold(f64::NEG_INFINITY, f64::max);
    bars.iter()
        .map(|b| {
            if vmax > vmin {
                MIN_BODY_FRACTION + (1.0 - MIN_BODY_FRACTION) * (b.volume - vmin) / (vmax - vmin)
            } else {
                1.0
            }
        })
        .collect()
}

fn draw_candles(img: &mut RasterImage, lay: &Layout, bars: &[OhlcvBar], body_fraction: impl Fn(usize) -> f64) {
    for (i, bar) in bars.iter().enumerate() {
        let wick = lay.wick_column(i);
        img.fill(wick..wick + 1, lay.row(bar.high)..=lay.row(bar.low), 1.0);

        let cols = lay.body_columns(i, body_fraction(i));
        let top = lay.row(bar.open.max(bar.close));
        let bottom = lay.row(bar.open.min(bar.close));
        if bar.open >= bar.close {
            // Bear body (filled) or doji (a single row since top == bottom).
            img.fill(cols, top..=bottom, 1.0);
        } else if bottom - top >= 2 && cols.len() >= 3 {
            img.fill(cols.clone(), top..=bottom, 0.0);
            img.fill(cols.clone(), top..=top, 1.0);
            img.fill(cols.clone(), bottom..=bottom, 1.0);
            img.fill(cols.start..cols.start + 1, top..=bottom, 1.0);
            img.fill(cols.end - 1..cols.end, top..=bottom, 1.0);
        } else {
            // Too small for a hollow interior.
            img.fill(cols, top..=bottom, 1.0);
        }
    }
}

fn draw_close_line(img: &mut RasterImage, lay: &Layout, bars: &[OhlcvBar]) {
    // The stroke is centered on the top edge of each close's row so that a
    // horizontal run covers exactly two pixel rows.
    let points: Vec<(f64, f64)> = bars
        .iter()
        .enumerate()
        .map(|(i, b)| (lay.slot_center(i), lay.row(b.close) as f64))
        .collect();
    if points.len() == 1 {
        draw_segment(img, points[0], points[0]);
    }
    for seg in points.windows(2) {
        draw_segment(img, seg[0], seg[1]);
    }
}

fn draw_segment(img: &mut RasterImage, a: (f64, f64), b: (f64, f64)) {
    let pad = LINE_HALF_WIDTH + 1.0;
    let c0 = (a.0.min(b.0) - pad).floor().max(0.0) as usize;
    let c1 = ((a.0.max(b.0) + pad).ceil().max(0.0) as usize).min(img.width);
    let r0 = (a.1.min(b.1) - pad).floor().max(0.0) as usize;
    let r1 = ((a.1.max(b.1) + pad).ceil().max(0.0) as usize).min(img.height);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    for r in r0..r1 {
        for c in c0..c1 {
            let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
            let t = if len2 > 0.0 {
                (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
            if qx * qx + qy * qy <= LINE_HALF_WIDTH * LINE_HALF_WIDTH {
                img.set(c, r, 1.0);
            }
        }
    }
}
