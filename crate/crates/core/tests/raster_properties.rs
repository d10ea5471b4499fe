mod common;

use chartsignal::raster::{render_bars, volume_fractions, Layout, RenderStyle, NATIVE_SIDE};
use chartsignal::OhlcvBar;
use proptest::prelude::*;

const SIDE: usize = NATIVE_SIDE;

fn window() -> impl Strategy<Value = Vec<OhlcvBar>> {
    (any::<u64>(), 20usize..31, 40usize..200).prop_map(|(seed, days, end)| {
        let s = common::synthetic("R", seed, 220);
        s.bars()[end + 1 - days..=end].to_vec()
    })
}

fn style() -> impl Strategy<Value = RenderStyle> {
    prop::sample::select(RenderStyle::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translation_and_scaling_leave_pixels_unchanged(
        bars in window(),
        style in style(),
        shift in 0.0f64..500.0,
        scale in 0.01f64..100.0,
    ) {
        let base = render_bars(&bars, style, SIDE, SIDE);
        prop_assert!(base.pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert_eq!(&render_bars(&bars, style, SIDE, SIDE).pixels, &base.pixels);
        let shifted = common::map_prices(&bars, |p| p + shift);
        prop_assert_eq!(&render_bars(&shifted, style, SIDE, SIDE).pixels, &base.pixels);
        let scaled = common::map_prices(&bars, |p| p * scale);
        prop_assert_eq!(&render_bars(&scaled, style, SIDE, SIDE).pixels, &base.pixels);
    }

    #[test]
    fn every_candle_slot_has_ink(bars in window()) {
        let img = render_bars(&bars, RenderStyle::CandleOhlc, SIDE, SIDE);
        let lay = Layout::new(&bars, SIDE, SIDE);
        for day in 0..bars.len() {
            let inked = lay.slot_columns(day).any(|c| (0..SIDE).any(|r| img.is_ink(c, r)));
            prop_assert!(inked, "day {}", day);
        }
    }

    #[test]
    fn body_width_follows_volume(bars in window()) {
        let f = volume_fractions(&bars);
        let lay = Layout::new(&bars, SIDE, SIDE);
        for a in 0..bars.len() {
            for b in 0..bars.len() {
                if bars[a].volume > bars[b].volume {
                    prop_assert!(f[a] >= f[b]);
                    prop_assert!(lay.body_columns(a, f[a]).len() + 1 >= lay.body_columns(b, f[b]).len());
                }
            }
        }
    }
}

#[test]
fn highest_high_touches_top_row_and_lowest_low_bottom_row() {
    let s = common::synthetic("T", 8, 120);
    let bars = &s.bars()[60..80];
    let img = render_bars(bars, RenderStyle::CandleOhlc, SIDE, SIDE);
    let lay = Layout::new(bars, SIDE, SIDE);
    let hi = (0..bars.len())
        .max_by(|&a, &b| bars[a].high.total_cmp(&bars[b].high))
        .unwrap();
    let lo = (0..bars.len())
        .min_by(|&a, &b| bars[a].low.total_cmp(&bars[b].low))
        .unwrap();
    assert!(img.is_ink(lay.wick_column(hi), 0));
    assert!(img.is_ink(lay.wick_column(lo), SIDE - 1));
}
