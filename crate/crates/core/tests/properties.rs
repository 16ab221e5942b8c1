use bodyresp_core::classify::{events_to_flags, smooth_events, PostProcess};
use bodyresp_core::evaluate::{adjust_predictions, roc_auc};
use bodyresp_core::featurize::impute;
use bodyresp_core::io::{read_events, read_labels, write_events, write_labels};
use bodyresp_core::model::{
    stress_log_to_label, EventSpan, LabelEvent, LabelSource, LookbackChoice, MinuteIndex, Polarity,
};
use bodyresp_core::stats::{bh_adjust, percentile_linear};
use proptest::prelude::*;

const BASE: i64 = 28_401_120;

fn span_strategy() -> impl Strategy<Value = EventSpan> {
    (0i64..5000, 1i64..120).prop_map(|(s, d)| EventSpan::from_minutes(BASE + s, BASE + s + d).unwrap())
}

proptest! {
    #[test]
    fn stress_log_polarity_follows_likert(likert in 1u8..=5, choice in 0usize..5, at in 100i64..100_000) {
        let lookback = LookbackChoice::ALL[choice];
        let l = stress_log_to_label(likert, lookback, MinuteIndex(at)).unwrap();
        prop_assert_eq!(l.polarity().is_stress(), likert >= 3);
        prop_assert_eq!(l.span().end(), MinuteIndex(at));
        prop_assert_eq!(l.span().duration_minutes(), lookback.duration_minutes());
        prop_assert_eq!(l.likert(), Some(likert));
    }

    #[test]
    fn out_of_range_likert_is_rejected(likert in prop_oneof![Just(0u8), 6u8..=255]) {
        prop_assert!(stress_log_to_label(likert, LookbackChoice::Min0To5, MinuteIndex(1000)).is_err());
    }

    #[test]
    fn imputation_fills_and_keeps_known_cells(cells in prop::collection::vec(prop::option::of(-100.0f64..100.0), 1..40)) {
        match impute(&cells) {
            None => prop_assert!(cells.iter().all(Option::is_none)),
            Some(out) => {
                prop_assert_eq!(out.len(), cells.len());
                prop_assert!(out.iter().all(|v| v.is_finite()));
                for (c, o) in cells.iter().zip(&out) {
                    if let Some(c) = c {
                        prop_assert_eq!(c, o);
                    }
                }
                let lo = cells.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                let hi = cells.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out.iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
            }
        }
    }

    #[test]
    fn bh_adjustment_is_bounded_and_monotone(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let adj = bh_adjust(&p);
        for (a, q) in adj.iter().zip(&p) {
            prop_assert!(*a >= *q && *a <= 1.0);
        }
        for i in 0..p.len() {
            for j in 0..p.len() {
                if p[i] < p[j] {
                    prop_assert!(adj[i] <= adj[j]);
                }
            }
        }
    }

    #[test]
    fn auc_matches_pair_counting(
        pairs in prop::collection::vec(((0u8..10).prop_map(|v| v as f64 / 10.0), any::<bool>()), 2..80)
    ) {
        let (s, y): (Vec<f64>, Vec<bool>) = pairs.into_iter().unzip();
        let mut wins = 0.0;
        let mut total = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] && !y[j] {
                    total += 1.0;
                    wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        match roc_auc(&s, &y) {
            None => prop_assert_eq!(total, 0.0),
            Some(a) => prop_assert!((a - wins / total).abs() < 1e-12),
        }
    }

    #[test]
    fn smoothing_respects_any_settings(
        flags in prop::collection::vec(any::<bool>(), 0..300),
        min_duration_min in 1i64..8,
        stitch_gap_min in 1i64..12,
    ) {
        let pp = PostProcess { min_duration_min, stitch_gap_min };
        let start = MinuteIndex(BASE);
        let ev = smooth_events(start, &flags, &pp);
        prop_assert!(ev.iter().all(|e| e.duration_minutes() >= min_duration_min));
        prop_assert!(ev.windows(2).all(|w| w[1].start().0 - w[0].end().0 >= stitch_gap_min));
        let again = smooth_events(start, &events_to_flags(start, flags.len(), &ev), &pp);
        prop_assert_eq!(again, ev);
    }

    #[test]
    fn exact_predictions_are_kept_by_adjustment(spans in prop::collection::vec(span_strategy(), 1..6)) {
        let labels: Vec<LabelEvent> = spans
            .iter()
            .map(|s| LabelEvent::new(*s, Polarity::Stress, LabelSource::SyntheticTruth, None).unwrap())
            .collect();
        let start = MinuteIndex(BASE);
        let len = 5200;
        let adjusted = adjust_predictions(start, len, &spans, &labels, 10);
        prop_assert_eq!(adjusted, events_to_flags(start, len, &spans));
    }

    #[test]
    fn percentiles_stay_in_range(mut x in prop::collection::vec(-1e3f64..1e3, 1..50), q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        x.sort_by(f64::total_cmp);
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let (a, b) = (percentile_linear(&x, lo), percentile_linear(&x, hi));
        prop_assert!(a >= x[0] && b <= x[x.len() - 1]);
        prop_assert!(a <= b);
    }

    #[test]
    fn csv_round_trips(spans in prop::collection::vec(span_strategy(), 0..20), likerts in prop::collection::vec(1u8..=5, 20)) {
        let dir = tempfile::tempdir().unwrap();
        let events: Vec<(String, EventSpan)> = spans.iter().enumerate().map(|(i, s)| (format!("S{:02}", i % 3 + 1), *s)).collect();
        let path = dir.path().join("events.csv");
        write_events(&path, &events).unwrap();
        prop_assert_eq!(read_events(&path).unwrap(), events);

        let labels: Vec<(String, LabelEvent)> = spans
            .iter()
            .zip(&likerts)
            .map(|(s, &k)| ("S01".to_string(), stress_log_to_label(k, LookbackChoice::Min5To15, s.end()).unwrap()))
            .collect();
        let path = dir.path().join("labels.csv");
        write_labels(&path, &labels).unwrap();
        prop_assert_eq!(read_labels(&path).unwrap(), labels);
    }
}
