//! Per-subject wiring of the stages: raw streams to masked minute table,
//! per-user normalization and windowed features.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confounders::{apply_masks, compute_mask, ConfounderConfig, ConfounderMask};
use crate::error::Result;
use crate::featurize::{
    featurize_subject, normalize_per_user, Catalog, FeatureMatrix, NormalizedTable, RowFilter, WindowConfig,
};
use crate::model::{
    minute_labels, Channel, EventSpan, LabelEvent, MinuteIndex, MinuteTable, SignalBundle, SignalGroup, UserStats,
};
use crate::preprocess::{build_minute_table, PreprocessConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageConfig {
    pub preprocess: PreprocessConfig,
    pub confounders: ConfounderConfig,
}

#[derive(Debug, Clone)]
pub struct ProcessedSubject {
    pub subject_id: String,
    /// Table before confounder masking.
    pub raw: MinuteTable,
    pub mask: ConfounderMask,
    pub table: MinuteTable,
    pub user_stats: UserStats,
    pub normalized: NormalizedTable,
    pub labels: BTreeMap<MinuteIndex, bool>,
}

/// Normalization statistics from minutes outside any label span. A channel
/// never valid there (a lab-only subject, say) falls back to every minute.
pub fn user_stats_unlabeled(table: &MinuteTable, labels: &BTreeMap<MinuteIndex, bool>) -> UserStats {
    let all = UserStats::from_tables([table]);
    let mut free = table.clone();
    let start = free.start();
    for (i, row) in free.rows_mut().iter_mut().enumerate() {
        if labels.contains_key(&start.offset(i as i64)) {
            for g in SignalGroup::ALL {
                row.invalidate(g);
            }
        }
    }
    let unlabeled = UserStats::from_tables([&free]);
    let stats = Channel::ALL
        .into_iter()
        .map(|c| {
            let has_free = free.rows().iter().any(|r| r.get(c).is_some());
            let s = if has_free { unlabeled.get(c) } else { all.get(c) };
            (c, s.expect("stats cover every channel"))
        })
        .collect();
    UserStats { stats }
}

/// Preprocess, mask and normalize one subject.
pub fn process_subject(
    bundle: &SignalBundle,
    labels: &[LabelEvent],
    sleep: &[EventSpan],
    cfg: &StageConfig,
) -> Result<ProcessedSubject> {
    let raw = build_minute_table(bundle, &cfg.preprocess)?;
    let mut mask = compute_mask(bundle, &raw, &cfg.confounders);
    mask.mark_sleep(sleep);
    let table = apply_masks(&raw, &mask, sleep)?;
    let labels = minute_labels(labels);
    let user_stats = user_stats_unlabeled(&table, &labels);
    let normalized = normalize_per_user(&table, &user_stats)?;
    Ok(ProcessedSubject {
        subject_id: bundle.subject_id.clone(),
        raw,
        mask,
        table,
        user_stats,
        normalized,
        labels,
    })
}

/// Feature rows for every subject, in subject order.
pub fn feature_matrix(
    subjects: &[ProcessedSubject],
    catalog: &Catalog,
    window: &WindowConfig,
    filter: RowFilter,
) -> FeatureMatrix {
    let rows = subjects
        .par_iter()
        .flat_map_iter(|s| featurize_subject(&s.subject_id, &s.normalized, &s.labels, catalog, window, filter))
        .collect();
    FeatureMatrix {
        descriptors: catalog.descriptors().to_vec(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LabelSource, MinuteRow, Polarity};

    #[test]
    fn unlabeled_stats_skip_labeled_minutes() {
        let mut rows = Vec::new();
        for i in 0..10 {
            let mut r = MinuteRow::default();
            r.valid.set(SignalGroup::Hr, true);
            r.values[Channel::HrMean.index()] = Some(if i < 5 { 60.0 } else { 100.0 });
            rows.push(r);
        }
        let table = MinuteTable::new(MinuteIndex(0), rows).unwrap();
        let label = LabelEvent::new(
            EventSpan::from_minutes(5, 10).unwrap(),
            Polarity::Stress,
            LabelSource::TsstManual,
            None,
        )
        .unwrap();
        let s = user_stats_unlabeled(&table, &minute_labels(&[label]));
        assert_eq!(s.get(Channel::HrMean).unwrap().mean, 60.0);

        let everything = LabelEvent::new(
            EventSpan::from_minutes(0, 10).unwrap(),
            Polarity::NoStress,
            LabelSource::TsstManual,
            None,
        )
        .unwrap();
        let s = user_stats_unlabeled(&table, &minute_labels(&[everything]));
        assert_eq!(s.get(Channel::HrMean).unwrap().mean, 80.0);
    }
}
