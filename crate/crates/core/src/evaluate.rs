//! Event-tolerant scoring of predictions against labels, the metric set,
//! and the event-shuffling permutation test.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{minute_labels, EventSpan, LabelEvent, MinuteIndex};
use crate::stats::derive_seed;

pub const DEFAULT_TOLERANCE_MIN: i64 = 10;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn record(&mut self, truth: bool, pred: bool) {
        match (truth, pred) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    BalancedAccuracy,
    Sensitivity,
    Specificity,
    Ppv,
    Npv,
    F1,
    Fpr,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Accuracy,
        Metric::BalancedAccuracy,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::Ppv,
        Metric::Npv,
        Metric::F1,
        Metric::Fpr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::BalancedAccuracy => "balanced_accuracy",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::Ppv => "ppv",
            Metric::Npv => "npv",
            Metric::F1 => "f1",
            Metric::Fpr => "fpr",
        }
    }
}

/// Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub roc_auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub fpr: Option<f64>,
    pub counts: Confusion,
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl MetricSet {
    pub fn from_counts(c: Confusion, roc_auc: Option<f64>) -> Self {
        let sensitivity = ratio(c.tp, c.tp + c.fn_);
        let specificity = ratio(c.tn, c.tn + c.fp);
        let ppv = ratio(c.tp, c.tp + c.fp);
        let f1 = match (ppv, sensitivity) {
            (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
            _ => None,
        };
        MetricSet {
            roc_auc,
            accuracy: ratio(c.tp + c.tn, c.total()),
            balanced_accuracy: sensitivity.zip(specificity).map(|(a, b)| (a + b) / 2.0),
            sensitivity,
            specificity,
            ppv,
            npv: ratio(c.tn, c.tn + c.fn_),
            f1,
            fpr: specificity.map(|s| 1.0 - s),
            counts: c,
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::BalancedAccuracy => self.balanced_accuracy,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::Ppv => self.ppv,
            Metric::Npv => self.npv,
            Metric::F1 => self.f1,
            Metric::Fpr => self.fpr,
        }
    }
}

/// Area under the ROC curve from ranks, ties sharing their mean rank.
/// `None` without both classes.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * mean_rank;
        i = j + 1;
    }
    let p = pos as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Per-minute adjusted predictions over `[start, start + len)`.
///
/// A stress label with any predicted event within the tolerance is marked
/// fully predicted and every such event is consumed; unconsumed events keep
/// their own minutes.
pub fn adjust_predictions(
    start: MinuteIndex,
    len: usize,
    pred_events: &[EventSpan],
    label_events: &[LabelEvent],
    tolerance: i64,
) -> Vec<bool> {
    let mut out = vec![false; len];
    let mut mark = |s: EventSpan| {
        for m in s.minutes() {
            let i = m.0 - start.0;
            if i >= 0 && (i as usize) < len {
                out[i as usize] = true;
            }
        }
    };
    let mut consumed = vec![false; pred_events.len()];
    for l in label_events.iter().filter(|l| l.polarity().is_stress()) {
        let zone = l.span().expanded(tolerance);
        let mut hit = false;
        for (k, p) in pred_events.iter().enumerate() {
            if p.overlaps(&zone) {
                consumed[k] = true;
                hit = true;
            }
        }
        if hit {
            mark(l.span());
        }
    }
    for (p, c) in pred_events.iter().zip(&consumed) {
        if !c {
            mark(*p);
        }
    }
    out
}

/// Confusion counts over the labeled minutes of the axis.
pub fn confusion_on_axis(start: MinuteIndex, adjusted: &[bool], truth: &BTreeMap<MinuteIndex, bool>) -> Confusion {
    let mut c = Confusion::default();
    let end = start.offset(adjusted.len() as i64);
    for (&m, &t) in truth.range(start..end) {
        c.record(t, adjusted[(m.0 - start.0) as usize]);
    }
    c
}

/// Metrics over labeled minutes. `truth[i]` is `None` for unlabeled minutes;
/// `probs`, when given, feed the ROC AUC.
pub fn compute_metrics(adjusted: &[bool], truth: &[Option<bool>], probs: Option<&[Option<f64>]>) -> Result<MetricSet> {
    let mut c = Confusion::default();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, (&p, &t)) in adjusted.iter().zip(truth).enumerate() {
        let Some(t) = t else { continue };
        c.record(t, p);
        if let Some(Some(s)) = probs.map(|v| v[i]) {
            scores.push(s);
            labels.push(t);
        }
    }
    if c.total() == 0 {
        return Err(Error::Metric("no labeled minutes to score".into()));
    }
    let auc = if probs.is_some() {
        roc_auc(&scores, &labels)
    } else {
        None
    };
    Ok(MetricSet::from_counts(c, auc))
}

/// One subject-day: the placement domain for shuffled events.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDay {
    pub subject_id: String,
    pub start: MinuteIndex,
    pub len: usize,
    pub labels: Vec<LabelEvent>,
    pub predictions: Vec<EventSpan>,
}

impl SubjectDay {
    pub fn span(&self) -> EventSpan {
        EventSpan::new(self.start, self.start.offset(self.len as i64)).expect("non-empty day")
    }

    fn confusion(&self, preds: &[EventSpan], tolerance: i64) -> Confusion {
        let adjusted = adjust_predictions(self.start, self.len, preds, &self.labels, tolerance);
        confusion_on_axis(self.start, &adjusted, &minute_labels(&self.labels))
    }
}

/// Splits subject-level events into days of `day_minutes` starting at
/// `origin`; events are clipped to each day.
pub fn split_days(
    subject_id: &str,
    origin: MinuteIndex,
    n_days: usize,
    day_minutes: usize,
    labels: &[LabelEvent],
    predictions: &[EventSpan],
) -> Vec<SubjectDay> {
    (0..n_days)
        .map(|d| {
            let start = origin.offset((d * day_minutes) as i64);
            let day = EventSpan::new(start, start.offset(day_minutes as i64)).expect("positive day length");
            let clip = |s: &EventSpan| {
                let a = s.start().max(day.start());
                let b = s.end().min(day.end());
                (a < b).then(|| EventSpan::new(a, b).expect("clipped span"))
            };
            SubjectDay {
                subject_id: subject_id.to_string(),
                start,
                len: day_minutes,
                labels: labels
                    .iter()
                    .filter_map(|l| {
                        let s = clip(&l.span())?;
                        LabelEvent::new(s, l.polarity(), l.source(), l.likert()).ok()
                    })
                    .collect(),
                predictions: predictions.iter().filter_map(clip).collect(),
            }
        })
        .collect()
}

/// Pooled metrics across days.
pub fn evaluate_days(days: &[SubjectDay], tolerance: i64) -> Result<MetricSet> {
    let mut c = Confusion::default();
    for d in days {
        c.add(&d.confusion(&d.predictions, tolerance));
    }
    if c.total() == 0 {
        return Err(Error::Metric("no labeled minutes to score".into()));
    }
    Ok(MetricSet::from_counts(c, None))
}

/// Re-places `events` uniformly inside `day`, preserving durations and
/// forbidding overlap. Longer events are placed first.
pub fn shuffle_events(events: &[EventSpan], day: EventSpan, rng: &mut impl Rng) -> Result<Vec<EventSpan>> {
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(events[i].duration_minutes()));
    let mut placed: Vec<Option<EventSpan>> = vec![None; events.len()];
    let mut taken: Vec<EventSpan> = Vec::with_capacity(events.len());
    for i in order {
        let dur = events[i].duration_minutes();
        let room = day.duration_minutes() - dur;
        if room < 0 {
            return Err(Error::Placement(format!(
                "event of {dur} min does not fit a {} min day",
                day.duration_minutes()
            )));
        }
        let mut ok = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let s = day.start().offset(rng.random_range(0..=room));
            let cand = EventSpan::new(s, s.offset(dur)).expect("positive duration");
            if !taken.iter().any(|t| t.overlaps(&cand)) {
                ok = Some(cand);
                break;
            }
        }
        let Some(c) = ok else {
            return Err(Error::Placement(format!(
                "could not place a {dur} min event after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )));
        };
        taken.push(c);
        placed[i] = Some(c);
    }
    Ok(placed.into_iter().map(|p| p.expect("every event placed")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricNull {
    pub metric: Metric,
    pub actual: Option<f64>,
    pub null_mean: Option<f64>,
    pub p_value: f64,
    pub draws: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub n_iterations: usize,
    pub master_seed: u64,
    pub tolerance_min: i64,
    pub actual: MetricSet,
    pub metrics: Vec<MetricNull>,
}

impl PermutationReport {
    pub fn metric(&self, m: Metric) -> &MetricNull {
        self.metrics
            .iter()
            .find(|x| x.metric == m)
            .expect("every metric reported")
    }
}

/// Stream seed for one shuffle of one subject-day.
pub fn shuffle_seed(master_seed: u64, iteration: usize, day_index: usize) -> u64 {
    derive_seed(master_seed, &[iteration as u64, day_index as u64])
}

/// Chance estimate by shuffling predicted events within each subject-day.
/// A metric's p-value is the share of null draws strictly above the actual
/// value, floored at `1/n`; it is 1 when there is nothing to shuffle or the
/// actual value is undefined.
pub fn permutation_test(days: &[SubjectDay], n: usize, master_seed: u64, tolerance: i64) -> Result<PermutationReport> {
    if n == 0 {
        return Err(Error::Config("permutation test needs at least one iteration".into()));
    }
    let actual = evaluate_days(days, tolerance)?;
    let nulls: Vec<MetricSet> = (0..n)
        .into_par_iter()
        .map(|it| {
            let mut c = Confusion::default();
            for (j, d) in days.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed(master_seed, it, j));
                let shuffled = shuffle_events(&d.predictions, d.span(), &mut rng)?;
                c.add(&d.confusion(&shuffled, tolerance));
            }
            Ok(MetricSet::from_counts(c, None))
        })
        .collect::<Result<Vec<_>>>()?;
    let no_events = days.iter().all(|d| d.predictions.is_empty());
    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            let draws: Vec<Option<f64>> = nulls.iter().map(|s| s.get(m)).collect();
            let defined: Vec<f64> = draws.iter().flatten().copied().collect();
            let null_mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            let a = actual.get(m);
            let p_value = match a {
                Some(a) if !no_events => {
                    let above = defined.iter().filter(|&&v| v > a).count().max(1);
                    above as f64 / n as f64
                }
                _ => 1.0,
            };
            MetricNull {
                metric: m,
                actual: a,
                null_mean,
                p_value,
                draws,
            }
        })
        .collect();
    Ok(PermutationReport {
        n_iterations: n,
        master_seed,
        tolerance_min: tolerance,
        actual,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LabelSource, Polarity};

    fn span(a: i64, b: i64) -> EventSpan {
        EventSpan::from_minutes(a, b).unwrap()
    }

    fn stress(a: i64, b: i64) -> LabelEvent {
        LabelEvent::new(span(a, b), Polarity::Stress, LabelSource::TsstManual, None).unwrap()
    }

    fn calm(a: i64, b: i64) -> LabelEvent {
        LabelEvent::new(span(a, b), Polarity::NoStress, LabelSource::TsstManual, None).unwrap()
    }

    #[test]
    fn adjustment_marks_whole_label() {
        let adj = adjust_predictions(MinuteIndex(0), 120, &[span(50, 55)], &[stress(58, 70)], 10);
        assert!(adj[58..70].iter().all(|&v| v));
        assert!(adj[50..55].iter().all(|&v| !v));
        assert_eq!(adj.iter().filter(|&&v| v).count(), 12);
    }

    #[test]
    fn adjustment_outside_tolerance() {
        let adj = adjust_predictions(
            MinuteIndex(0),
            120,
            &[span(100, 105)],
            &[stress(70, 85), calm(95, 110)],
            10,
        );
        assert!(adj[100..105].iter().all(|&v| v));
        assert!(adj[70..85].iter().all(|&v| !v));
        let c = confusion_on_axis(MinuteIndex(0), &adj, &minute_labels(&[stress(70, 85), calm(95, 110)]));
        assert_eq!(c.fp, 5);
        assert_eq!(c.fn_, 15);
    }

    #[test]
    fn no_predictions_all_negative() {
        let adj = adjust_predictions(MinuteIndex(0), 50, &[], &[stress(10, 20)], 10);
        assert!(adj.iter().all(|&v| !v));
    }

    #[test]
    fn one_prediction_matches_two_labels() {
        let adj = adjust_predictions(
            MinuteIndex(0),
            100,
            &[span(30, 35)],
            &[stress(10, 25), stress(40, 50)],
            10,
        );
        assert!(adj[10..25].iter().all(|&v| v) && adj[40..50].iter().all(|&v| v));
        assert!(adj[30..35].iter().all(|&v| !v));
    }

    #[test]
    fn metric_examples() {
        let truth: Vec<Option<bool>> = (0..100).map(|i| Some(i < 41)).collect();
        let perfect: Vec<bool> = truth.iter().map(|t| t.unwrap()).collect();
        let m = compute_metrics(&perfect, &truth, None).unwrap();
        for k in [
            m.accuracy,
            m.balanced_accuracy,
            m.sensitivity,
            m.specificity,
            m.ppv,
            m.npv,
            m.f1,
        ] {
            assert_eq!(k, Some(1.0));
        }
        assert_eq!(m.fpr, Some(0.0));

        let m = compute_metrics(&[false; 100], &truth, None).unwrap();
        assert_eq!(m.sensitivity, Some(0.0));
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(m.balanced_accuracy, Some(0.5));
        assert_eq!(m.ppv, None);

        let m = MetricSet::from_counts(
            Confusion {
                tp: 47,
                fn_: 53,
                tn: 91,
                fp: 9,
            },
            None,
        );
        assert!((m.sensitivity.unwrap() - 0.47).abs() < 1e-12);
        assert!((m.specificity.unwrap() - 0.91).abs() < 1e-12);
        assert_eq!(
            m.balanced_accuracy.unwrap(),
            (m.sensitivity.unwrap() + m.specificity.unwrap()) / 2.0
        );
        assert_eq!(m.fpr.unwrap(), 1.0 - m.specificity.unwrap());

        assert!(matches!(compute_metrics(&[true], &[None], None), Err(Error::Metric(_))));
    }

    #[test]
    fn auc_with_ties() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.3, 0.4], &[false, false, true, true]), Some(1.0));
        assert_eq!(roc_auc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, true]), None);
    }

    #[test]
    fn zero_events_gives_unit_p() {
        let day = SubjectDay {
            subject_id: "s".into(),
            start: MinuteIndex(0),
            len: 200,
            labels: vec![stress(10, 20), calm(50, 60)],
            predictions: vec![],
        };
        let r = permutation_test(&[day], 20, 1, 10).unwrap();
        for m in &r.metrics {
            assert_eq!(m.p_value, 1.0);
            assert_eq!(m.draws.len(), 20);
        }
        assert_eq!(r.metric(Metric::Sensitivity).null_mean, Some(0.0));
    }

    #[test]
    fn overfull_day_fails_placement() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = shuffle_events(&[span(0, 30), span(40, 70)], span(0, 50), &mut rng);
        assert!(matches!(r, Err(Error::Placement(_))));
    }

    #[test]
    fn shuffles_preserve_durations() {
        let events = [span(5, 10), span(20, 40), span(60, 63)];
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = shuffle_events(&events, span(0, 120), &mut rng).unwrap();
            let mut a: Vec<i64> = s.iter().map(|e| e.duration_minutes()).collect();
            a.sort();
            assert_eq!(a, vec![3, 5, 20]);
            for (i, x) in s.iter().enumerate() {
                assert!(x.start().0 >= 0 && x.end().0 <= 120);
                for y in &s[i + 1..] {
                    assert!(!x.overlaps(y));
                }
            }
        }
    }
}
