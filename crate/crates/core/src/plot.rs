//! Minimal RGB plotting: lines, bars, error bars and markers on a fixed
//! canvas. Charts carry no text; axes ranges are implied by the data.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

pub type Color = Rgb<u8>;

pub const WHITE: Color = Rgb([255, 255, 255]);
pub const BLACK: Color = Rgb([0, 0, 0]);
pub const GREY: Color = Rgb([170, 170, 170]);
pub const LIGHT_GREY: Color = Rgb([225, 225, 225]);
pub const BLUE: Color = Rgb([31, 119, 180]);
pub const ORANGE: Color = Rgb([255, 127, 14]);
pub const GREEN: Color = Rgb([44, 160, 44]);
pub const RED: Color = Rgb([214, 39, 40]);
pub const PURPLE: Color = Rgb([148, 103, 189]);
pub const BROWN: Color = Rgb([140, 86, 75]);

/// Series colors in a stable order.
pub const PALETTE: [Color; 6] = [BLUE, ORANGE, GREEN, RED, PURPLE, BROWN];

const MARGIN: u32 = 20;

/// A canvas with a rectangular plot area mapped to data coordinates.
pub struct Chart {
    img: RgbImage,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Chart {
    pub fn new(width: u32, height: u32, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let mut chart = Self {
            img: RgbImage::from_pixel(width, height, WHITE),
            x_range: widen(x_range),
            y_range: widen(y_range),
        };
        chart.frame();
        chart
    }

    fn frame(&mut self) {
        let (w, h) = self.img.dimensions();
        let (l, r, t, b) = (MARGIN as f64, (w - MARGIN) as f64, MARGIN as f64, (h - MARGIN) as f64);
        for (a, z) in [((l, b), (r, b)), ((l, t), (l, b))] {
            self.pixel_line(a, z, BLACK);
        }
    }

    /// Pixel x of a data x.
    pub fn px(&self, x: f64) -> f64 {
        let w = (self.img.width() - 2 * MARGIN) as f64;
        MARGIN as f64 + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * w
    }

    /// Pixel y of a data y (up is larger).
    pub fn py(&self, y: f64) -> f64 {
        let h = (self.img.height() - 2 * MARGIN) as f64;
        (self.img.height() - MARGIN) as f64 - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * h
    }

    fn put(&mut self, x: i64, y: i64, color: Color) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, color);
        }
    }

    fn pixel_line(&mut self, a: (f64, f64), b: (f64, f64), color: Color) {
        let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            self.put(x.round() as i64, y.round() as i64, color);
        }
    }

    /// Polyline through data points; `None` breaks the line.
    pub fn line(&mut self, points: &[(f64, Option<f64>)], color: Color) {
        let mut prev: Option<(f64, f64)> = None;
        for &(x, y) in points {
            match y {
                Some(y) => {
                    let p = (self.px(x), self.py(y));
                    if let Some(q) = prev {
                        self.pixel_line(q, p, color);
                    } else {
                        self.put(p.0.round() as i64, p.1.round() as i64, color);
                    }
                    prev = Some(p);
                }
                None => prev = None,
            }
        }
    }

    pub fn hline(&mut self, y: f64, color: Color) {
        let (x0, x1) = (self.px(self.x_range.0), self.px(self.x_range.1));
        let py = self.py(y);
        self.pixel_line((x0, py), (x1, py), color);
    }

    /// Filled bar from `y = base` to `y = top`, centred on `x`, `width` in data units.
    pub fn bar(&mut self, x: f64, width: f64, base: f64, top: f64, color: Color) {
        let (x0, x1) = (
            self.px(x - width / 2.0).round() as i64,
            self.px(x + width / 2.0).round() as i64,
        );
        let (y0, y1) = (self.py(top).round() as i64, self.py(base).round() as i64);
        for yy in y0.min(y1)..=y0.max(y1) {
            for xx in x0..=x1 {
                self.put(xx, yy, color);
            }
        }
    }

    /// Vertical error bar with small caps.
    pub fn error_bar(&mut self, x: f64, lo: f64, hi: f64, color: Color) {
        let px = self.px(x);
        let (a, b) = (self.py(lo), self.py(hi));
        self.pixel_line((px, a), (px, b), color);
        for y in [a, b] {
            self.pixel_line((px - 3.0, y), (px + 3.0, y), color);
        }
    }

    /// Upward triangle with its apex at the data point.
    pub fn triangle_up(&mut self, x: f64, y: f64, size: i64, color: Color) {
        let (cx, cy) = (self.px(x).round() as i64, self.py(y).round() as i64);
        for dy in 0..=size {
            for dx in -dy / 2..=dy / 2 {
                self.put(cx + dx, cy + dy, color);
            }
        }
    }

    /// Filled square centred on the data point.
    pub fn square(&mut self, x: f64, y: f64, half: i64, color: Color) {
        let (cx, cy) = (self.px(x).round() as i64, self.py(y).round() as i64);
        for dy in -half..=half {
            for dx in -half..=half {
                self.put(cx + dx, cy + dy, color);
            }
        }
    }

    pub fn image(&self) -> &RgbImage {
        &self.img
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.img
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::Image(other),
            })
    }
}

/// Data range of finite values, or `(0, 1)` when there are none.
pub fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_hits_plot_corners() {
        let c = Chart::new(240, 140, (0.0, 10.0), (0.0, 1.0));
        assert_eq!(c.px(0.0), 20.0);
        assert_eq!(c.px(10.0), 220.0);
        assert_eq!(c.py(0.0), 120.0);
        assert_eq!(c.py(1.0), 20.0);
    }

    #[test]
    fn degenerate_ranges_are_widened() {
        let c = Chart::new(100, 100, (3.0, 3.0), (5.0, 5.0));
        assert!(c.px(3.0).is_finite() && c.py(5.0).is_finite());
        assert_eq!(c.py(5.0), 50.0);
    }

    #[test]
    fn markers_draw_in_place() {
        let mut c = Chart::new(100, 100, (0.0, 1.0), (0.0, 1.0));
        c.square(0.5, 0.5, 1, RED);
        assert_eq!(*c.image().get_pixel(50, 50), RED);
        c.triangle_up(0.25, 0.5, 4, BLUE);
        assert_eq!(*c.image().get_pixel(35, 52), BLUE);
    }
}
