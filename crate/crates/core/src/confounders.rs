//! Exercise, water-exposure and loose-wear filters, and masking of the
//! minute table.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Channel, EventSpan, MinuteIndex, MinuteTable, SignalBundle, SignalGroup};
use crate::stats::{mean_var, sigmoid};

/// Per-minute accelerometer aggregates, in `accel.csv` column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelAggregates {
    /// Mean acceleration magnitude (g).
    pub magnitude_mean: f64,
    /// Standard deviation of acceleration magnitude (g).
    pub magnitude_std: f64,
    /// Step-cadence proxy (steps/min).
    pub cadence: f64,
    /// Zero-crossing rate of the detrended magnitude (per sample).
    pub zero_crossing_rate: f64,
    /// Share of energy on the dominant axis.
    pub axis_energy_ratio: f64,
    /// Mean absolute jerk (g/s).
    pub jerk_mean: f64,
}

impl AccelAggregates {
    pub fn from_array(a: [f64; 6]) -> Self {
        AccelAggregates {
            magnitude_mean: a[0],
            magnitude_std: a[1],
            cadence: a[2],
            zero_crossing_rate: a[3],
            axis_energy_ratio: a[4],
            jerk_mean: a[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.magnitude_mean,
            self.magnitude_std,
            self.cadence,
            self.zero_crossing_rate,
            self.axis_energy_ratio,
            self.jerk_mean,
        ]
    }
}

/// Fixed logistic exercise model: the score combines the current minute's
/// aggregates with their mean over the trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseModel {
    pub intercept: f64,
    pub current_weights: [f64; 6],
    pub window_weights: [f64; 6],
    pub window_minutes: i64,
}

impl Default for ExerciseModel {
    fn default() -> Self {
        ExerciseModel {
            intercept: -10.0,
            current_weights: [0.0, 8.0, 0.04, 2.0, 0.0, 1.0],
            window_weights: [0.0, 4.0, 0.02, 0.0, 0.0, 0.5],
            window_minutes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfounderConfig {
    pub exercise: ExerciseModel,
    pub hr_exercise_probability: f64,
    pub eda_exercise_probability: f64,
    /// EDA must exceed the trailing mean by this many standard deviations.
    pub eda_exercise_sigma: f64,
    pub eda_trailing_minutes: i64,
    pub water_pressure_std_hpa: f64,
    pub water_eda_slope: f64,
    pub water_min_pressure_samples: usize,
    pub open_circuit_us: f64,
    pub loose_wear_fraction: f64,
    pub loose_wear_post_minutes: i64,
}

impl Default for ConfounderConfig {
    fn default() -> Self {
        ConfounderConfig {
            exercise: ExerciseModel::default(),
            hr_exercise_probability: 0.80,
            eda_exercise_probability: 0.90,
            eda_exercise_sigma: 2.0,
            eda_trailing_minutes: 10,
            water_pressure_std_hpa: 0.3,
            water_eda_slope: 0.1,
            water_min_pressure_samples: 3,
            open_circuit_us: 0.02,
            loose_wear_fraction: 0.5,
            loose_wear_post_minutes: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Exercise,
    Water,
    LooseWear,
    Sleep,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Exercise => "exercise",
            Reason::Water => "water",
            Reason::LooseWear => "loose_wear",
            Reason::Sleep => "sleep",
        }
    }

    pub fn parse(s: &str) -> Option<Reason> {
        [Reason::Exercise, Reason::Water, Reason::LooseWear, Reason::Sleep]
            .into_iter()
            .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskFlags {
    pub hr_unusable: bool,
    pub eda_unusable: bool,
    pub reasons: BTreeSet<Reason>,
}

impl MaskFlags {
    fn merge(&mut self, other: &MaskFlags) {
        self.hr_unusable |= other.hr_unusable;
        self.eda_unusable |= other.eda_unusable;
        self.reasons.extend(other.reasons.iter().copied());
    }
}

/// Confounder flags on the same minute axis as a `MinuteTable`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfounderMask {
    start: MinuteIndex,
    flags: Vec<MaskFlags>,
}

impl ConfounderMask {
    pub fn empty(start: MinuteIndex, len: usize) -> Self {
        ConfounderMask {
            start,
            flags: vec![MaskFlags::default(); len],
        }
    }

    pub fn for_table(table: &MinuteTable) -> Self {
        Self::empty(table.start(), table.len())
    }

    pub fn start(&self) -> MinuteIndex {
        self.start
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flags(&self) -> &[MaskFlags] {
        &self.flags
    }

    pub fn get(&self, m: MinuteIndex) -> Option<&MaskFlags> {
        let i = m.0 - self.start.0;
        (i >= 0).then(|| self.flags.get(i as usize)).flatten()
    }

    fn get_mut(&mut self, m: MinuteIndex) -> Option<&mut MaskFlags> {
        let i = m.0 - self.start.0;
        if i < 0 {
            return None;
        }
        self.flags.get_mut(i as usize)
    }

    pub fn set(&mut self, m: MinuteIndex, flags: MaskFlags) {
        if let Some(f) = self.get_mut(m) {
            *f = flags;
        }
    }

    pub fn flag(&mut self, m: MinuteIndex, hr: bool, eda: bool, reason: Reason) {
        if let Some(f) = self.get_mut(m) {
            f.hr_unusable |= hr;
            f.eda_unusable |= eda;
            if hr || eda {
                f.reasons.insert(reason);
            }
        }
    }

    /// Marks sleep spans as EDA-unusable.
    pub fn mark_sleep(&mut self, spans: &[EventSpan]) {
        for s in spans {
            for m in s.minutes() {
                self.flag(m, false, true, Reason::Sleep);
            }
        }
    }

    /// Commutative OR of two masks on the same axis.
    pub fn union(&self, other: &ConfounderMask) -> Result<ConfounderMask> {
        if self.start != other.start || self.len() != other.len() {
            return Err(Error::Alignment("mask axes differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.flags.iter_mut().zip(other.flags.iter()) {
            a.merge(b);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExerciseDecision {
    pub hr_unusable: bool,
    pub eda_unusable: bool,
    pub p_exercise: Option<f64>,
}

/// Exercise probability for `minute` from the trailing accelerometer window,
/// or `None` when the window holds no accelerometer minute.
pub fn exercise_probability(
    accel: &[(MinuteIndex, [f64; 6])],
    minute: MinuteIndex,
    model: &ExerciseModel,
) -> Option<f64> {
    let lo = accel.partition_point(|a| a.0 < minute.offset(1 - model.window_minutes));
    let hi = accel.partition_point(|a| a.0 <= minute);
    let window = &accel[lo..hi];
    if window.is_empty() {
        return None;
    }
    let mut mean = [0.0; 6];
    for (_, a) in window {
        for k in 0..6 {
            mean[k] += a[k] / window.len() as f64;
        }
    }
    let current = match window.last() {
        Some((m, a)) if *m == minute => *a,
        _ => mean,
    };
    let mut z = model.intercept;
    for k in 0..6 {
        z += model.current_weights[k] * current[k] + model.window_weights[k] * mean[k];
    }
    Some(sigmoid(z))
}

/// Decision rule on a known exercise probability. EDA is only condemned
/// when exercise is very likely and the current EDA magnitude stands out
/// from the preceding minutes.
pub fn exercise_decision(
    p_exercise: f64,
    eda_now: Option<f64>,
    eda_trailing: &[f64],
    cfg: &ConfounderConfig,
) -> (bool, bool) {
    let hr = p_exercise >= cfg.hr_exercise_probability;
    let eda_jump = match eda_now {
        Some(v) if eda_trailing.len() >= 2 => {
            let (m, var) = mean_var(eda_trailing);
            v > m + cfg.eda_exercise_sigma * var.sqrt()
        }
        _ => false,
    };
    (hr, p_exercise >= cfg.eda_exercise_probability && eda_jump)
}

pub fn exercise_filter(
    accel: &[(MinuteIndex, [f64; 6])],
    eda_magnitude: &MinuteTable,
    minute: MinuteIndex,
    cfg: &ConfounderConfig,
) -> ExerciseDecision {
    let Some(p) = exercise_probability(accel, minute, &cfg.exercise) else {
        return ExerciseDecision {
            hr_unusable: false,
            eda_unusable: false,
            p_exercise: None,
        };
    };
    let eda_now = eda_magnitude.row(minute).and_then(|r| r.get(Channel::EdaMagnitude));
    let trailing: Vec<f64> = (1..=cfg.eda_trailing_minutes)
        .filter_map(|k| eda_magnitude.row(minute.offset(-k)))
        .filter_map(|r| r.get(Channel::EdaMagnitude))
        .collect();
    let (hr, eda) = exercise_decision(p, eda_now, &trailing, cfg);
    ExerciseDecision {
        hr_unusable: hr,
        eda_unusable: eda,
        p_exercise: Some(p),
    }
}

/// Water exposure: high within-minute pressure variation together with a
/// rising EDA slope.
pub fn water_filter(
    pressure: &[(i64, f64)],
    eda_slope: Option<f64>,
    minute: MinuteIndex,
    cfg: &ConfounderConfig,
) -> bool {
    let lo = pressure.partition_point(|s| s.0 < minute.start_seconds());
    let hi = pressure.partition_point(|s| s.0 < minute.offset(1).start_seconds());
    if hi - lo < cfg.water_min_pressure_samples {
        return false;
    }
    let vals: Vec<f64> = pressure[lo..hi].iter().map(|s| s.1).collect();
    let (_, var) = mean_var(&vals);
    let slope_up = eda_slope.is_some_and(|s| s > cfg.water_eda_slope);
    var.sqrt() > cfg.water_pressure_std_hpa && slope_up
}

/// Share of raw EDA samples in `minute` at open-circuit level, if any
/// samples exist.
pub fn open_circuit_fraction(eda: &[(i64, f64)], minute: MinuteIndex, floor_us: f64) -> Option<f64> {
    let lo = eda.partition_point(|s| s.0 < minute.start_millis());
    let hi = eda.partition_point(|s| s.0 < minute.offset(1).start_millis());
    if hi == lo {
        return None;
    }
    let n = eda[lo..hi].iter().filter(|s| s.1 < floor_us).count();
    Some(n as f64 / (hi - lo) as f64)
}

/// Minutes excluded for loose wear: every minute with at least half of its
/// samples at open-circuit level plus the following stabilisation minutes.
pub fn loose_wear_filter(eda: &[(i64, f64)], cfg: &ConfounderConfig) -> BTreeSet<MinuteIndex> {
    let mut out = BTreeSet::new();
    let (Some(first), Some(last)) = (eda.first(), eda.last()) else {
        return out;
    };
    for m in MinuteIndex::of_millis(first.0).0..=MinuteIndex::of_millis(last.0).0 {
        let m = MinuteIndex(m);
        if open_circuit_fraction(eda, m, cfg.open_circuit_us).is_some_and(|f| f >= cfg.loose_wear_fraction) {
            for k in 0..=cfg.loose_wear_post_minutes {
                out.insert(m.offset(k));
            }
        }
    }
    out
}

/// Runs the three filters over a subject's table and raw streams.
pub fn compute_mask(bundle: &SignalBundle, table: &MinuteTable, cfg: &ConfounderConfig) -> ConfounderMask {
    let mut mask = ConfounderMask::for_table(table);
    for (i, m) in table.minutes().enumerate() {
        let ex = exercise_filter(&bundle.accel_minutes, table, m, cfg);
        mask.flag(m, ex.hr_unusable, ex.eda_unusable, Reason::Exercise);
        let slope = table.rows()[i].get(Channel::EdaSlope);
        if water_filter(&bundle.pressure, slope, m, cfg) {
            mask.flag(m, false, true, Reason::Water);
        }
    }
    for m in loose_wear_filter(&bundle.eda_200hz, cfg) {
        mask.flag(m, false, true, Reason::LooseWear);
    }
    mask
}

/// Lowers validity where masked: HR-unusable clears HR and HRV, EDA-unusable
/// and sleep clear EDA and skin temperature.
pub fn apply_masks(table: &MinuteTable, mask: &ConfounderMask, sleep_spans: &[EventSpan]) -> Result<MinuteTable> {
    if table.start() != mask.start() || table.len() != mask.len() {
        return Err(Error::Alignment(format!(
            "table covers [{}, {}) but mask covers [{}, {})",
            table.start(),
            table.end(),
            mask.start(),
            mask.start().offset(mask.len() as i64)
        )));
    }
    let mut out = table.clone();
    let start = out.start();
    for (i, (row, f)) in out.rows_mut().iter_mut().zip(mask.flags()).enumerate() {
        let m = start.offset(i as i64);
        if f.hr_unusable {
            row.invalidate(SignalGroup::Hr);
            row.invalidate(SignalGroup::Hrv);
        }
        let asleep = sleep_spans.iter().any(|s| s.contains(m));
        if f.eda_unusable || asleep {
            row.invalidate(SignalGroup::Eda);
            row.invalidate(SignalGroup::St);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroupFlags, MinuteRow};

    fn full_row(eda: f64) -> MinuteRow {
        let mut r = MinuteRow {
            valid: GroupFlags::all(),
            ..Default::default()
        };
        for c in Channel::ALL {
            r.values[c.index()] = Some(1.0);
        }
        r.values[Channel::EdaMagnitude.index()] = Some(eda);
        r
    }

    fn table(n: usize) -> MinuteTable {
        MinuteTable::new(
            MinuteIndex(100),
            (0..n).map(|i| full_row(2.0 + 0.01 * (i % 3) as f64)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn exercise_thresholds() {
        let cfg = ConfounderConfig::default();
        let flat = [2.0, 2.01, 1.99, 2.0, 2.02, 1.98, 2.0, 2.01, 1.99, 2.0];
        assert_eq!(exercise_decision(0.85, Some(2.0), &flat, &cfg), (true, false));
        let (m, v) = mean_var(&flat);
        let jump = m + 3.0 * v.sqrt();
        assert_eq!(exercise_decision(0.95, Some(jump), &flat, &cfg), (true, true));
        assert_eq!(exercise_decision(0.50, Some(jump), &flat, &cfg), (false, false));
        // very likely exercise but EDA not elevated
        assert_eq!(exercise_decision(0.95, Some(2.0), &flat, &cfg), (true, false));
    }

    #[test]
    fn exercise_probability_separates_synthetic_activity() {
        let model = ExerciseModel::default();
        let rest = [1.0, 0.05, 0.0, 0.05, 0.4, 0.05];
        let run = [1.3, 0.6, 160.0, 0.6, 0.5, 2.0];
        let mut accel: Vec<(MinuteIndex, [f64; 6])> = (0..20).map(|m| (MinuteIndex(m), rest)).collect();
        assert!(exercise_probability(&accel, MinuteIndex(15), &model).unwrap() < 0.01);
        accel[15].1 = run;
        assert!(exercise_probability(&accel, MinuteIndex(15), &model).unwrap() > 0.9);
        assert_eq!(exercise_probability(&accel, MinuteIndex(40), &model), None);
    }

    #[test]
    fn missing_accel_window_gives_no_flags() {
        let t = table(5);
        let d = exercise_filter(&[], &t, MinuteIndex(102), &ConfounderConfig::default());
        assert_eq!(
            d,
            ExerciseDecision {
                hr_unusable: false,
                eda_unusable: false,
                p_exercise: None
            }
        );
    }

    #[test]
    fn water_needs_both_conditions() {
        let cfg = ConfounderConfig::default();
        let m = MinuteIndex(10);
        let noisy: Vec<(i64, f64)> = (0..12)
            .map(|i| (600 + 5 * i, 1013.0 + if i % 2 == 0 { 0.5 } else { -0.5 }))
            .collect();
        let flat: Vec<(i64, f64)> = (0..12).map(|i| (600 + 5 * i, 1013.0)).collect();
        assert!(water_filter(&noisy, Some(0.3), m, &cfg));
        assert!(!water_filter(&flat, Some(0.3), m, &cfg));
        assert!(!water_filter(&noisy, Some(-0.3), m, &cfg));
        assert!(!water_filter(&noisy[..2], Some(0.3), m, &cfg));
    }

    fn eda_minute(m: i64, open_fraction: f64) -> Vec<(i64, f64)> {
        let open = (12_000.0 * open_fraction) as i64;
        (0..12_000)
            .map(|i| (m * 60_000 + i * 5, if i < open { 0.001 } else { 2.0 }))
            .collect()
    }

    #[test]
    fn loose_wear_exclusions() {
        let cfg = ConfounderConfig::default();
        let mut eda = Vec::new();
        for m in 0..20 {
            eda.extend(eda_minute(m, if m == 4 { 0.55 } else { 0.0 }));
        }
        let ex = loose_wear_filter(&eda, &cfg);
        assert_eq!(ex, (4..=9).map(MinuteIndex).collect());

        let mut eda = Vec::new();
        for m in 0..20 {
            eda.extend(eda_minute(m, if m == 4 { 0.40 } else { 0.0 }));
        }
        assert!(loose_wear_filter(&eda, &cfg).is_empty());

        let mut eda = Vec::new();
        for m in 0..20 {
            eda.extend(eda_minute(m, if m == 2 || m == 5 { 0.7 } else { 0.0 }));
        }
        let oracle: BTreeSet<MinuteIndex> = (2..=7).chain(5..=10).map(MinuteIndex).collect();
        assert_eq!(loose_wear_filter(&eda, &cfg), oracle);
        assert_eq!(oracle.len(), 9);
    }

    #[test]
    fn exercise_mask_clears_cardiac_groups_only() {
        let t = table(5);
        let mut mask = ConfounderMask::for_table(&t);
        mask.flag(MinuteIndex(102), true, false, Reason::Exercise);
        let out = apply_masks(&t, &mask, &[]).unwrap();
        let r = out.row(MinuteIndex(102)).unwrap();
        assert!(!r.valid.get(SignalGroup::Hr) && !r.valid.get(SignalGroup::Hrv));
        assert!(r.valid.get(SignalGroup::Eda) && r.valid.get(SignalGroup::St));
        assert_eq!(r.get(Channel::HrMean), None);
        assert_eq!(r.get(Channel::Rmssd), None);
        assert!(r.get(Channel::EdaMagnitude).is_some());
    }

    #[test]
    fn empty_mask_is_identity() {
        let t = table(5);
        let out = apply_masks(&t, &ConfounderMask::for_table(&t), &[]).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn full_eda_mask_annihilates() {
        let t = table(6);
        let mut mask = ConfounderMask::for_table(&t);
        for m in t.minutes() {
            mask.flag(m, false, true, Reason::Water);
        }
        let out = apply_masks(&t, &mask, &[]).unwrap();
        assert_eq!(out.valid_count(SignalGroup::Eda), 0);
        assert_eq!(out.valid_count(SignalGroup::St), 0);
        assert_eq!(out.valid_count(SignalGroup::Hr), 6);
    }

    #[test]
    fn sleep_spans_clear_eda() {
        let t = table(6);
        let sleep = [EventSpan::from_minutes(101, 103).unwrap()];
        let out = apply_masks(&t, &ConfounderMask::for_table(&t), &sleep).unwrap();
        assert_eq!(out.valid_count(SignalGroup::Eda), 4);
        assert!(!out.row(MinuteIndex(102)).unwrap().valid.get(SignalGroup::St));
    }

    #[test]
    fn axis_mismatch_is_rejected() {
        let t = table(5);
        let mask = ConfounderMask::empty(MinuteIndex(0), 5);
        assert!(matches!(apply_masks(&t, &mask, &[]), Err(Error::Alignment(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn masking_idempotent_and_shrinking(
                hr in proptest::collection::vec(any::<bool>(), 30),
                eda in proptest::collection::vec(any::<bool>(), 30),
                sleep_at in 100i64..130,
            ) {
                let t = table(30);
                let mut mask = ConfounderMask::for_table(&t);
                for (i, m) in t.minutes().enumerate() {
                    mask.flag(m, hr[i], eda[i], Reason::Exercise);
                }
                let sleep = [EventSpan::from_minutes(sleep_at, sleep_at + 3).unwrap()];
                let once = apply_masks(&t, &mask, &sleep).unwrap();
                let twice = apply_masks(&once, &mask, &sleep).unwrap();
                prop_assert_eq!(&once, &twice);
                for (a, b) in once.rows().iter().zip(t.rows()) {
                    prop_assert!(a.valid.is_subset_of(&b.valid));
                }
            }

            #[test]
            fn loose_wear_spans_at_least_six(flags in proptest::collection::vec(any::<bool>(), 15)) {
                let cfg = ConfounderConfig::default();
                let mut eda = Vec::new();
                for (m, &f) in flags.iter().enumerate() {
                    let minute: Vec<(i64, f64)> = (0..600)
                        .map(|i| ((m as i64) * 60_000 + i * 100, if f && i < 400 { 0.0 } else { 2.0 }))
                        .collect();
                    eda.extend(minute);
                }
                let ex = loose_wear_filter(&eda, &cfg);
                for (m, &f) in flags.iter().enumerate() {
                    if f {
                        for k in 0..=5 {
                            prop_assert!(ex.contains(&MinuteIndex(m as i64 + k)));
                        }
                    }
                }
                let expected: usize = {
                    let mut s = BTreeSet::new();
                    for (m, &f) in flags.iter().enumerate() {
                        if f { for k in 0..=5 { s.insert(m as i64 + k); } }
                    }
                    s.len()
                };
                prop_assert_eq!(ex.len(), expected);
            }
        }
    }
}
