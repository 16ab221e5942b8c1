//! Derivation of the fourteen minutely channels from raw streams.

pub mod eda;
pub mod hr;
pub mod hrv;
pub mod st;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eda::{eda_smoothed, eda_tonic, EdaConfig, EdaMinute};
pub use hr::{hr_minutely, HR_MAX_GAP_S};
pub use hrv::{hrv_metrics, rr_clean, HrvMetrics, RrConfig, RrWindow};
pub use st::{st_minutely, StMinute};

use crate::error::Result;
use crate::model::{Channel, MinuteIndex, MinuteRow, MinuteTable, SignalBundle, SignalGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub hr_max_gap_s: i64,
    pub rr: RrConfig,
    pub eda: EdaConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            hr_max_gap_s: HR_MAX_GAP_S,
            rr: RrConfig::default(),
            eda: EdaConfig::default(),
        }
    }
}

/// Builds the minutely table over every minute touched by the bundle.
///
/// HRV is only valid where HR is valid, and EDA and skin temperature are
/// valid together or not at all.
pub fn build_minute_table(bundle: &SignalBundle, cfg: &PreprocessConfig) -> Result<MinuteTable> {
    bundle.validate()?;
    let Some((first, last)) = bundle.minute_range() else {
        return Ok(MinuteTable::empty(MinuteIndex(0), 0));
    };
    let len = (last.0 - first.0 + 1) as usize;
    let mut rows = vec![MinuteRow::default(); len];
    let pos = |m: MinuteIndex| (m.0 - first.0) as usize;

    for (m, v) in hr_minutely(&bundle.hr_1hz, cfg.hr_max_gap_s) {
        if let Some(v) = v {
            let r = &mut rows[pos(m)];
            r.valid.set(SignalGroup::Hr, true);
            r.values[Channel::HrMean.index()] = Some(v);
        }
    }

    let hrv: Vec<Option<HrvMetrics>> = (0..len)
        .into_par_iter()
        .map(|i| {
            if !rows[i].valid.get(SignalGroup::Hr) || bundle.rr.is_empty() {
                return None;
            }
            let w = rr_clean(&bundle.rr, first.offset(i as i64), &cfg.rr);
            hrv_metrics(&w).ok()
        })
        .collect();
    for (row, metrics) in rows.iter_mut().zip(hrv) {
        if let Some(metrics) = metrics {
            row.valid.set(SignalGroup::Hrv, true);
            for (c, v) in metrics.channel_values() {
                row.values[c.index()] = Some(v);
            }
        }
    }

    let mut eda = vec![None; len];
    for (m, v) in eda_tonic(&bundle.eda_200hz, &cfg.eda) {
        eda[pos(m)] = v;
    }
    let mut st = vec![None; len];
    for (m, v) in st_minutely(&bundle.skin_temp) {
        st[pos(m)] = v;
    }
    for ((row, e), s) in rows.iter_mut().zip(eda).zip(st) {
        if let (Some(e), Some(s)) = (e, s) {
            row.valid.set(SignalGroup::Eda, true);
            row.valid.set(SignalGroup::St, true);
            row.values[Channel::EdaSlope.index()] = Some(e.slope);
            row.values[Channel::EdaMagnitude.index()] = Some(e.magnitude);
            row.values[Channel::StSlope.index()] = Some(s.slope);
            row.values[Channel::StMagnitude.index()] = Some(s.magnitude);
        }
    }

    MinuteTable::new(first, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle_minutes(n: i64) -> SignalBundle {
        let mut b = SignalBundle::new("s");
        b.hr_1hz = (0..n * 60).map(|t| (t, 75.0)).collect();
        let mut t = 0.0;
        while t < (n * 60_000) as f64 - 800.0 {
            t += 800.0;
            b.rr.push((t as i64, 800.0));
        }
        b.eda_200hz = (0..n * 12_000).map(|i| (i * 5, 2.0)).collect();
        b.skin_temp = (0..n * 6).map(|i| (i * 10, 33.0)).collect();
        b
    }

    #[test]
    fn clean_bundle_yields_full_validity() {
        let t = build_minute_table(&bundle_minutes(10), &PreprocessConfig::default()).unwrap();
        assert_eq!(t.len(), 10);
        // first minutes lack a full five-minute R-R history
        for (i, row) in t.rows().iter().enumerate() {
            assert!(row.valid.get(SignalGroup::Hr));
            assert!(row.valid.get(SignalGroup::Eda));
            assert!(row.valid.get(SignalGroup::St));
            assert_eq!(row.valid.get(SignalGroup::Hrv), i >= 4, "minute {i}");
        }
        let r = &t.rows()[6];
        assert_eq!(r.get(Channel::HrMean), Some(75.0));
        assert_eq!(r.get(Channel::RrMean), Some(800.0));
        assert_eq!(r.get(Channel::EdaMagnitude), Some(2.0));
        assert_eq!(r.get(Channel::StMagnitude), Some(33.0));
    }

    #[test]
    fn eda_without_st_is_invalid() {
        let mut b = bundle_minutes(6);
        b.skin_temp.clear();
        let t = build_minute_table(&b, &PreprocessConfig::default()).unwrap();
        assert_eq!(t.valid_count(SignalGroup::Eda), 0);
        assert_eq!(t.valid_count(SignalGroup::St), 0);
    }

    #[test]
    fn hrv_requires_hr() {
        let mut b = bundle_minutes(10);
        b.hr_1hz.retain(|s| s.0 < 420);
        let t = build_minute_table(&b, &PreprocessConfig::default()).unwrap();
        for row in t.rows() {
            if row.valid.get(SignalGroup::Hrv) {
                assert!(row.valid.get(SignalGroup::Hr));
            }
        }
        assert!(!t.rows()[8].valid.get(SignalGroup::Hrv));
    }
}
