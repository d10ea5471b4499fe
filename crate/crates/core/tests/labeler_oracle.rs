mod common;

use std::collections::BTreeMap;

use chartsignal::labeler::{
    extract_window, first_admissible, read_manifest, sample_balanced_dataset, write_manifest, ManifestEntry, RuleKind,
    SamplingConfig,
};
use chartsignal::market::generate_synthetic_corpus;
use chartsignal::{RenderStyle, SyntheticModel};

#[test]
fn sampled_labels_agree_with_recomputed_crossings() {
    let corpus = generate_synthetic_corpus(3, 30, 800, &SyntheticModel::default()).unwrap();
    let by_ticker: BTreeMap<&str, Vec<f64>> = corpus.iter().map(|s| (s.ticker(), s.adj_closes())).collect();
    for rule in RuleKind::ALL {
        let cfg = SamplingConfig {
            per_ticker: 10,
            seed: 5,
            ..Default::default()
        };
        let ds = sample_balanced_dataset(&corpus, rule, &cfg).unwrap();
        let (neg, pos) = ds.class_counts();
        assert_eq!(neg, pos);
        assert!(pos > 0);
        let mut per_ticker: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for w in &ds.samples {
            let closes = &by_ticker[w.ticker.as_str()];
            let events = common::events(closes, rule);
            assert_eq!(
                w.label == 1,
                events.contains(&w.end_index),
                "{} {rule} {}",
                w.ticker,
                w.end_index
            );
            assert_eq!(w.bars.len(), rule.window_days());
            assert!(w.end_index >= first_admissible(rule, rule.window_days()));
            assert_eq!(w.bars.last().unwrap().date, w.end_date);
            let e = per_ticker.entry(w.ticker.as_str()).or_default();
            if w.label == 1 {
                e.1 += 1;
            } else {
                e.0 += 1;
            }
        }
        assert!(per_ticker.values().all(|(n, p)| n == p && *p <= 10));
    }
}

#[test]
fn extraction_is_pure_and_bounded() {
    let s = common::synthetic("P", 4, 300);
    for rule in RuleKind::ALL {
        let first = first_admissible(rule, rule.window_days());
        assert!(extract_window(&s, first - 1, rule).is_err());
        assert!(extract_window(&s, s.len(), rule).is_err());
        let a = extract_window(&s, first, rule).unwrap();
        assert_eq!(a, extract_window(&s, first, rule).unwrap());
        assert_eq!(a.bars, s.bars()[first + 1 - rule.window_days()..=first]);
    }
}

#[test]
fn manifest_round_trips() {
    let corpus = generate_synthetic_corpus(1, 5, 400, &SyntheticModel::default()).unwrap();
    let ds = sample_balanced_dataset(&corpus, RuleKind::Bb, &SamplingConfig::default()).unwrap();
    let entries: Vec<ManifestEntry> = ds
        .samples
        .iter()
        .enumerate()
        .map(|(i, w)| ManifestEntry {
            ticker: w.ticker.clone(),
            end_date: w.end_date,
            rule: w.rule,
            label: w.label,
            style: RenderStyle::CandleOhlc,
            image_path: format!("img/{i:05}.png"),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("manifest.json");
    write_manifest(&p, &entries).unwrap();
    assert_eq!(read_manifest(&p).unwrap(), entries);
}
