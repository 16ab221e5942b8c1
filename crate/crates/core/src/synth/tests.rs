use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{Channel, LabelSource, Polarity};
use crate::preprocess::{build_minute_table, PreprocessConfig};

fn quiet_tsst(cfg: &SynthConfig, subject: usize) -> (SubjectProfile, DayPlan) {
    let profile = SubjectProfile::draw(cfg, subject);
    let mut plan = plan_tsst_session(cfg, &profile, 0).unwrap();
    plan.arousal.clear();
    plan.hr_gaps.clear();
    plan.rr_gaps.clear();
    plan.eda_gaps.clear();
    (profile, plan)
}

#[test]
fn generation_is_deterministic() {
    let cfg = SynthConfig {
        n_subjects: 2,
        eda_rate_hz: 25,
        seed: 9,
        ..Default::default()
    };
    let a = generate(&cfg).unwrap();
    let b = generate(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.bundle, y.bundle);
        assert_eq!(x.labels, y.labels);
        assert_eq!(x.truth, y.truth);
    }
    let other = generate(&SynthConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a[0].bundle.hr_1hz, other[0].bundle.hr_1hz);
}

#[test]
fn zero_amplitude_event_leaves_streams_unchanged() {
    let cfg = SynthConfig {
        eda_rate_hz: 25,
        ..Default::default()
    };
    let (profile, plan) = quiet_tsst(&cfg, 0);
    let base = render_day(&cfg, &profile, &plan);
    let mut with = plan.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let onset = with.start.offset(70);
    let span = gen_arousal_event(&mut with, profile.template(&cfg, 12), 0.0, onset, &mut rng).unwrap();
    assert_eq!(span.duration_minutes(), 12);
    assert_eq!(
        with.truth(&profile.id)
            .iter()
            .filter(|t| t.kind == TruthKind::Arousal)
            .count(),
        1
    );
    assert_eq!(render_day(&cfg, &profile, &with), base);
}

#[test]
fn session_event_counts_mostly_one_or_two() {
    let cfg = SynthConfig::default();
    let mut counts = [0usize; 5];
    for s in 0..400 {
        let (_, plans) = plan_subject(&cfg, s).unwrap();
        let k = plans[0].arousal.len();
        assert!((1..=4).contains(&k), "subject {s}: {k} events");
        counts[k] += 1;
    }
    let mode = (1..=4).max_by_key(|&k| counts[k]).unwrap();
    assert!(mode <= 2, "{counts:?}");
    assert!(counts[3] + counts[4] > 0);
}

#[test]
fn session_labels_partition_the_hour() {
    let cfg = SynthConfig::default();
    for s in 0..50 {
        let (_, plans) = plan_subject(&cfg, s).unwrap();
        let p = &plans[0];
        assert_eq!(p.session.len(), 5);
        let session = EventSpan::new(p.session[0].1.start(), p.session[4].1.end()).unwrap();
        assert_eq!(session.duration_minutes(), 60);
        let total: i64 = p.labels.iter().map(|l| l.span().duration_minutes()).sum();
        assert_eq!(total, 60);
        for l in &p.labels {
            assert_eq!(l.source(), LabelSource::TsstManual);
            assert!(session.start() <= l.span().start() && l.span().end() <= session.end());
            let is_event = p.arousal.iter().any(|e| e.span == l.span());
            assert_eq!(is_event, l.polarity() == Polarity::Stress);
        }
        for w in p.arousal.windows(2) {
            assert!(w[1].span.start().0 - w[0].span.end().0 >= 2);
        }
    }
}

#[test]
fn response_shape_survives_preprocessing() {
    let cfg = SynthConfig {
        eda_rate_hz: 50,
        ..Default::default()
    };
    for subject in 0..12 {
        let (mut profile, mut plan) = quiet_tsst(&cfg, subject);
        profile.eda_amp_us = profile.eda_amp_us.max(cfg.template.eda_amp_us.0);
        let onset = plan.start.offset(70);
        let mut rng = ChaCha8Rng::seed_from_u64(subject as u64);
        gen_arousal_event(&mut plan, profile.template(&cfg, 15), cfg.amplitude, onset, &mut rng).unwrap();
        let bundle = render_day(&cfg, &profile, &plan);
        let table = build_minute_table(&bundle, &PreprocessConfig::default()).unwrap();
        let at = |k: i64, c: Channel| table.row(onset.offset(k)).and_then(|r| r.get(c)).unwrap();
        let peak = (0..15)
            .max_by(|&a, &b| at(a, Channel::HrMean).total_cmp(&at(b, Channel::HrMean)))
            .unwrap();
        assert!((2..=6).contains(&peak), "subject {subject}: hr peak at +{peak}");
        for k in 0..3 {
            let (a, b) = (at(k, Channel::EdaMagnitude), at(k + 1, Channel::EdaMagnitude));
            assert!(b > a, "subject {subject}: eda not rising at +{k}: {a} -> {b}");
        }
    }
}

#[test]
fn free_living_day_structure() {
    let cfg = SynthConfig {
        n_subjects: 1,
        days_per_subject: 3,
        eda_rate_hz: 25,
        ..Default::default()
    };
    let (profile, plans) = plan_subject(&cfg, 0).unwrap();
    assert_eq!(plans.len(), 4);
    assert_eq!(plans[3].kind, DayKind::Tsst);
    for p in &plans[..3] {
        assert_eq!(p.kind, DayKind::FreeLiving);
        assert_eq!(p.len(), 1440);
        let (lo, hi) = (p.local_midnight.offset(480), p.local_midnight.offset(1320));
        assert!((5..=7).contains(&p.notifications.len()));
        for (m, _) in &p.notifications {
            assert!(*m >= lo && *m < hi);
        }
        for l in p.labels.iter().filter(|l| l.source() == LabelSource::StressLog) {
            let hit = p.arousal.iter().any(|e| e.span.overlaps(&l.span()));
            assert_eq!(hit, l.likert().unwrap() >= 3);
        }
        for g in &p.eda_gaps {
            assert!(!p.sleep.iter().any(|s| s.overlaps(g)));
            assert!(!p.water.iter().any(|w| w.span.overlaps(g)));
            assert!(!p.loose_wear.iter().any(|w| w.overlaps(g)));
        }
    }
    let s = generate_subject(&cfg, 0).unwrap();
    s.bundle.validate().unwrap();
    assert_eq!(s.id(), profile.id);
    assert_eq!(s.bundle.accel_minutes.len(), 3 * 1440 + plans[3].len());
}

#[test]
fn config_validation() {
    assert!(SynthConfig::default().validate().is_ok());
    let bad = [
        SynthConfig {
            eda_rate_hz: 300,
            ..Default::default()
        },
        SynthConfig {
            amplitude: -1.0,
            ..Default::default()
        },
        SynthConfig {
            tsst_event_probs: [0.5, 0.5, 0.5, 0.0],
            ..Default::default()
        },
        SynthConfig {
            n_subjects: 0,
            ..Default::default()
        },
        SynthConfig {
            rates: EpisodeRates {
                water: -0.1,
                ..Default::default()
            },
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
    }
}
