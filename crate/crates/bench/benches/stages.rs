use std::hint::black_box;

use bodyresp_core::classify::logreg::{train_logreg, LogRegConfig};
use bodyresp_core::classify::{smooth_events, PostProcess};
use bodyresp_core::evaluate::{permutation_test, SubjectDay};
use bodyresp_core::featurize::{default_catalog, featurize_subject, Catalog, RowFilter, WindowConfig};
use bodyresp_core::model::{EventSpan, LabelEvent, LabelSource, MinuteIndex, Polarity};
use bodyresp_core::pipeline::{process_subject, StageConfig};
use bodyresp_core::preprocess::{hrv_metrics, rr_clean, RrConfig};
use bodyresp_core::synth::{generate_subject, SynthConfig};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASE: i64 = 28_401_120;

fn small_synth() -> SynthConfig {
    SynthConfig {
        n_subjects: 1,
        eda_rate_hz: 20,
        ..SynthConfig::default()
    }
}

fn hrv(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut t = (BASE - 10) * 60_000;
    let beats: Vec<(i64, f64)> = (0..2000)
        .map(|_| {
            let rr = 800.0 + rng.random_range(-60.0..60.0);
            t += rr as i64;
            (t, rr)
        })
        .collect();
    let cfg = RrConfig::default();
    c.bench_function("rr_clean + hrv_metrics, one window", |b| {
        b.iter(|| {
            let w = rr_clean(black_box(&beats), MinuteIndex(BASE), &cfg);
            hrv_metrics(&w).unwrap()
        })
    });
}

fn stages(c: &mut Criterion) {
    let cfg = small_synth();
    let subject = generate_subject(&cfg, 0).unwrap();
    let stage = StageConfig::default();
    c.bench_function("process_subject, lab session at 20 Hz", |b| {
        b.iter(|| process_subject(&subject.bundle, &subject.labels, &[], &stage).unwrap())
    });
    let processed = process_subject(&subject.bundle, &subject.labels, &[], &stage).unwrap();
    let catalog = Catalog::new(default_catalog()).unwrap();
    c.bench_function("featurize_subject, labeled minutes", |b| {
        b.iter(|| {
            featurize_subject(
                &processed.subject_id,
                &processed.normalized,
                &processed.labels,
                &catalog,
                &WindowConfig::default(),
                RowFilter::LabeledOnly,
            )
        })
    });
}

fn logreg(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<Vec<f64>> = (0..400)
        .map(|_| (0..40).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<bool> = x
        .iter()
        .map(|r| r[0] + 0.5 * r[1] + rng.random_range(-0.5..0.5) > 0.0)
        .collect();
    let cfg = LogRegConfig::default();
    c.bench_function("train_logreg 400x40", |b| {
        b.iter(|| train_logreg(&x, &y, &cfg, 0).unwrap())
    });
}

fn events(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let flags: Vec<bool> = (0..1440).map(|_| rng.random_bool(0.3)).collect();
    let pp = PostProcess::default();
    c.bench_function("smooth_events, one day", |b| {
        b.iter(|| smooth_events(MinuteIndex(BASE), black_box(&flags), &pp))
    });

    let days: Vec<SubjectDay> = (0..10)
        .map(|d| {
            let start = BASE + d * 1440;
            let spans: Vec<EventSpan> = (0..4)
                .map(|k| EventSpan::from_minutes(start + 200 + k * 250, start + 230 + k * 250).unwrap())
                .collect();
            SubjectDay {
                subject_id: format!("S{:02}", d + 1),
                start: MinuteIndex(start),
                len: 1440,
                labels: spans
                    .iter()
                    .map(|s| LabelEvent::new(*s, Polarity::Stress, LabelSource::SyntheticTruth, None).unwrap())
                    .collect(),
                predictions: spans.iter().map(|s| s.shifted(7)).collect(),
            }
        })
        .collect();
    c.bench_function("permutation_test, 10 days x 100 draws", |b| {
        b.iter_batched(
            || days.clone(),
            |d| permutation_test(&d, 100, 0, 10).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = hrv, stages, logreg, events
}
criterion_main!(benches);
