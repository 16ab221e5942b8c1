//! Per-user normalization, 31-minute windows, aggregation and univariate
//! feature selection.

pub mod catalog;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use catalog::{default_catalog, FeatureChannel, FeatureDescriptor, FeatureFn, N_FEATURE_CHANNELS};

use crate::error::{Error, Result};
use crate::model::{Channel, GroupFlags, MinuteIndex, MinuteTable, SignalGroup, UserStats};
use crate::stats::{bh_adjust, welch_p_value};

/// Below this standard deviation a channel's z-score is defined as 0.
pub const MIN_STD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRow {
    pub values: [Option<f64>; N_FEATURE_CHANNELS],
    pub valid: GroupFlags,
}

impl NormalizedRow {
    pub fn get(&self, c: FeatureChannel) -> Option<f64> {
        self.values[c.index()]
    }
}

/// Minute table carrying raw and z-scored copies of every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTable {
    pub start: MinuteIndex,
    pub rows: Vec<NormalizedRow>,
}

impl NormalizedTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn normalize_per_user(table: &MinuteTable, stats: &UserStats) -> Result<NormalizedTable> {
    let mut params = [(0.0, 0.0); 14];
    for c in Channel::ALL {
        let s = stats
            .get(c)
            .ok_or_else(|| Error::Config(format!("user stats missing channel {}", c.as_str())))?;
        params[c.index()] = (s.mean, s.std);
    }
    let rows = table
        .rows()
        .iter()
        .map(|r| {
            let mut values = [None; N_FEATURE_CHANNELS];
            for c in Channel::ALL {
                if let Some(v) = r.get(c) {
                    let (mean, std) = params[c.index()];
                    values[FeatureChannel::raw(c).index()] = Some(v);
                    values[FeatureChannel::zscored(c).index()] =
                        Some(if std < MIN_STD { 0.0 } else { (v - mean) / std });
                }
            }
            NormalizedRow { values, valid: r.valid }
        })
        .collect();
    Ok(NormalizedTable {
        start: table.start(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub length: usize,
    pub min_valid: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            length: 31,
            min_valid: 7,
        }
    }
}

/// Imputed window ending at `anchor`. Each signal group is kept or dropped
/// independently; dropped groups have no columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub anchor: MinuteIndex,
    pub kept: GroupFlags,
    /// Fraction of the window's minutes originally valid, per group.
    pub availability: [f64; 4],
    columns: Vec<Option<Vec<f64>>>,
}

impl Window {
    pub fn column(&self, c: FeatureChannel) -> Option<&[f64]> {
        self.columns[c.index()].as_deref()
    }
}

/// Fills interior gaps by linear interpolation and leading gaps with the
/// first observed value. Trailing gaps are filled with the last value.
pub fn impute(cells: &[Option<f64>]) -> Option<Vec<f64>> {
    let known: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let (&(first_i, first_v), &(last_i, last_v)) = (known.first()?, known.last()?);
    let mut out = vec![0.0; cells.len()];
    out[..first_i].fill(first_v);
    for w in known.windows(2) {
        let ((i0, v0), (i1, v1)) = (w[0], w[1]);
        out[i0] = v0;
        for (k, slot) in out.iter_mut().enumerate().take(i1).skip(i0 + 1) {
            *slot = v0 + (v1 - v0) * (k - i0) as f64 / (i1 - i0) as f64;
        }
    }
    out[last_i..].fill(last_v);
    Some(out)
}

fn window_at(table: &NormalizedTable, i: usize, cfg: &WindowConfig) -> Option<Window> {
    let len = cfg.length;
    let lo = (i + 1).saturating_sub(len);
    // cells before the table start count as missing
    let pad = len - (i + 1 - lo);
    let mut kept = GroupFlags::none();
    let mut availability = [0.0; 4];
    let mut columns: Vec<Option<Vec<f64>>> = vec![None; N_FEATURE_CHANNELS];
    for g in SignalGroup::ALL {
        if !table.rows[i].valid.get(g) {
            continue;
        }
        let n_valid = table.rows[lo..=i].iter().filter(|r| r.valid.get(g)).count();
        if n_valid < cfg.min_valid {
            continue;
        }
        kept.set(g, true);
        availability[g.index()] = n_valid as f64 / len as f64;
        for c in g.channels() {
            for fc in [FeatureChannel::raw(c), FeatureChannel::zscored(c)] {
                let mut cells = vec![None; pad];
                cells.extend(
                    table.rows[lo..=i]
                        .iter()
                        .map(|r| if r.valid.get(g) { r.get(fc) } else { None }),
                );
                columns[fc.index()] = impute(&cells);
            }
        }
    }
    kept.any().then(|| Window {
        anchor: table.start.offset(i as i64),
        kept,
        availability,
        columns,
    })
}

/// One candidate window per minute; windows where no group passes the
/// anchor and availability rules are dropped.
pub fn make_windows(table: &NormalizedTable, cfg: &WindowConfig) -> Vec<Window> {
    (0..table.len())
        .into_par_iter()
        .filter_map(|i| window_at(table, i, cfg))
        .collect()
}

/// Window anchored at a specific minute, if it passes the keep rules.
pub fn window_for(table: &NormalizedTable, anchor: MinuteIndex, cfg: &WindowConfig) -> Option<Window> {
    let i = anchor.0 - table.start.0;
    if i < 0 || i as usize >= table.len() {
        return None;
    }
    window_at(table, i as usize, cfg)
}

/// Descriptors resolved once for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Catalog {
    descriptors: Vec<FeatureDescriptor>,
    resolved: Vec<(FeatureChannel, FeatureFn)>,
}

impl Catalog {
    pub fn new(descriptors: Vec<FeatureDescriptor>) -> Result<Self> {
        let resolved = descriptors.iter().map(|d| d.resolve()).collect::<Result<Vec<_>>>()?;
        Ok(Catalog { descriptors, resolved })
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// Feature values in descriptor order; NaN where the window dropped the
    /// descriptor's group.
    pub fn evaluate(&self, w: &Window) -> Vec<f64> {
        self.resolved
            .iter()
            .map(|(ch, f)| w.column(*ch).map_or(f64::NAN, |x| f.eval(x)))
            .collect()
    }
}

pub fn aggregate_window(w: &Window, catalog: &[FeatureDescriptor]) -> Result<Vec<Option<f64>>> {
    let cat = Catalog::new(catalog.to_vec())?;
    Ok(cat
        .evaluate(w)
        .into_iter()
        .map(|v| (!v.is_nan()).then_some(v))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject_id: String,
    pub anchor: MinuteIndex,
    pub label: Option<bool>,
    pub kept: GroupFlags,
    /// NaN marks a descriptor whose group was dropped from the window.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub descriptors: Vec<FeatureDescriptor>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn column_index(&self, d: &FeatureDescriptor) -> Option<usize> {
        self.descriptors.iter().position(|x| x == d)
    }

    /// Rows where every group in `groups` was kept, projected onto
    /// `columns`, with their labels.
    pub fn submatrix(&self, groups: GroupFlags, columns: &[usize]) -> (Vec<Vec<f64>>, Vec<Option<bool>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut idx = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            if groups.is_subset_of(&r.kept) {
                x.push(columns.iter().map(|&c| r.values[c]).collect());
                y.push(r.label);
                idx.push(i);
            }
        }
        (x, y, idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFilter {
    All,
    LabeledOnly,
}

/// Windows and features for one subject.
pub fn featurize_subject(
    subject_id: &str,
    table: &NormalizedTable,
    labels: &BTreeMap<MinuteIndex, bool>,
    catalog: &Catalog,
    cfg: &WindowConfig,
    filter: RowFilter,
) -> Vec<FeatureRow> {
    (0..table.len())
        .into_par_iter()
        .filter_map(|i| {
            let anchor = table.start.offset(i as i64);
            let label = labels.get(&anchor).copied();
            if filter == RowFilter::LabeledOnly && label.is_none() {
                return None;
            }
            let w = window_at(table, i, cfg)?;
            Some(FeatureRow {
                subject_id: subject_id.to_string(),
                anchor,
                label,
                kept: w.kept,
                values: catalog.evaluate(&w),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub per_group: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { per_group: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub descriptor: FeatureDescriptor,
    pub p_value: f64,
    pub adjusted: f64,
}

/// Welch p-values over the labeled rows where each feature is present, then
/// Benjamini-Hochberg across all features.
pub fn score_features(fm: &FeatureMatrix) -> Result<Vec<FeatureScore>> {
    let labeled: Vec<&FeatureRow> = fm.rows.iter().filter(|r| r.label.is_some()).collect();
    let pos = labeled.iter().filter(|r| r.label == Some(true)).count();
    if pos == 0 || pos == labeled.len() {
        return Err(Error::Selection(
            "feature selection needs both stress and no-stress rows".into(),
        ));
    }
    let p: Vec<f64> = (0..fm.descriptors.len())
        .into_par_iter()
        .map(|j| {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for r in &labeled {
                let v = r.values[j];
                if v.is_nan() {
                    continue;
                }
                if r.label == Some(true) {
                    a.push(v);
                } else {
                    b.push(v);
                }
            }
            // sorted so the sums, and so the p-value, ignore row order
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            welch_p_value(&a, &b)
        })
        .collect();
    let adj = bh_adjust(&p);
    Ok(fm
        .descriptors
        .iter()
        .zip(p.iter().zip(adj))
        .map(|(d, (&p, a))| FeatureScore {
            descriptor: d.clone(),
            p_value: p,
            adjusted: a,
        })
        .collect())
}

/// Top features per signal group by adjusted p-value, ties broken by raw
/// p-value then descriptor name. Output is grouped in HR, HRV, EDA, ST
/// order.
pub fn select_features(fm: &FeatureMatrix, cfg: &SelectionConfig) -> Result<Vec<FeatureDescriptor>> {
    let scores = score_features(fm)?;
    let mut out = Vec::new();
    for g in SignalGroup::ALL {
        let mut group: Vec<(&FeatureScore, String)> = scores
            .iter()
            .filter(|s| s.descriptor.feature_channel().map(|c| c.group()).ok() == Some(g))
            .map(|s| (s, s.descriptor.name()))
            .collect();
        group.sort_by(|(a, an), (b, bn)| {
            a.adjusted
                .total_cmp(&b.adjusted)
                .then(a.p_value.total_cmp(&b.p_value))
                .then(an.cmp(bn))
        });
        out.extend(group.into_iter().take(cfg.per_group).map(|(s, _)| s.descriptor.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelStats, MinuteRow};

    fn stats_all(mean: f64, std: f64) -> UserStats {
        UserStats {
            stats: Channel::ALL
                .into_iter()
                .map(|c| (c, ChannelStats { mean, std }))
                .collect(),
        }
    }

    fn table_from(valid: &[bool], value: impl Fn(usize) -> f64) -> MinuteTable {
        let rows = valid
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut r = MinuteRow::default();
                if v {
                    r.valid = GroupFlags::all();
                    for c in Channel::ALL {
                        r.values[c.index()] = Some(value(i));
                    }
                }
                r
            })
            .collect();
        MinuteTable::new(MinuteIndex(0), rows).unwrap()
    }

    #[test]
    fn zscore_basic() {
        let t = table_from(&[true], |_| 70.0);
        let n = normalize_per_user(&t, &stats_all(60.0, 10.0)).unwrap();
        assert_eq!(n.rows[0].get(FeatureChannel::zscored(Channel::HrMean)), Some(1.0));
        assert_eq!(n.rows[0].get(FeatureChannel::raw(Channel::HrMean)), Some(70.0));
        assert_eq!(n.rows[0].values.iter().filter(|v| v.is_some()).count(), 28);
        let n = normalize_per_user(&t, &stats_all(60.0, 0.0)).unwrap();
        assert_eq!(n.rows[0].get(FeatureChannel::zscored(Channel::Rmssd)), Some(0.0));
    }

    #[test]
    fn missing_stats_channel() {
        let t = table_from(&[true], |_| 1.0);
        let mut s = stats_all(0.0, 1.0);
        s.stats.pop();
        assert!(matches!(normalize_per_user(&t, &s), Err(Error::Config(_))));
    }

    #[test]
    fn full_window_has_no_imputation() {
        let t = table_from(&[true; 31], |i| i as f64);
        let n = normalize_per_user(&t, &stats_all(0.0, 1.0)).unwrap();
        let ws = make_windows(&n, &WindowConfig::default());
        let w = ws.iter().find(|w| w.anchor == MinuteIndex(30)).unwrap();
        assert_eq!(w.availability, [1.0; 4]);
        let col = w.column(FeatureChannel::raw(Channel::HrMean)).unwrap();
        assert_eq!(col, (0..31).map(|i| i as f64).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn six_valid_minutes_rejected() {
        let mut valid = vec![false; 31];
        for v in valid.iter_mut().skip(25) {
            *v = true;
        }
        let t = table_from(&valid, |_| 1.0);
        let n = normalize_per_user(&t, &stats_all(0.0, 1.0)).unwrap();
        assert!(window_for(&n, MinuteIndex(30), &WindowConfig::default()).is_none());
        valid[24] = true;
        let t = table_from(&valid, |_| 1.0);
        let n = normalize_per_user(&t, &stats_all(0.0, 1.0)).unwrap();
        assert!(window_for(&n, MinuteIndex(30), &WindowConfig::default()).is_some());
    }

    #[test]
    fn leading_backfill_and_interior_interpolation() {
        let mut valid = vec![true; 31];
        for v in valid.iter_mut().take(10) {
            *v = false;
        }
        valid[20] = false;
        let t = table_from(&valid, |i| i as f64 * 2.0);
        let n = normalize_per_user(&t, &stats_all(0.0, 1.0)).unwrap();
        let w = window_for(&n, MinuteIndex(30), &WindowConfig::default()).unwrap();
        let col = w.column(FeatureChannel::raw(Channel::EdaMagnitude)).unwrap();
        assert!(col[..10].iter().all(|&v| v == 20.0));
        assert_eq!(col[20], 40.0);
        assert_eq!(col[21], 42.0);
        assert!((w.availability[0] - 20.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn window_count_matches_keep_rules() {
        let valid: Vec<bool> = (0..80).map(|i| i % 3 != 0 && !(30..45).contains(&i)).collect();
        let t = table_from(&valid, |i| i as f64);
        let n = normalize_per_user(&t, &stats_all(0.0, 1.0)).unwrap();
        let ws = make_windows(&n, &WindowConfig::default());
        let expected = (0..80)
            .filter(|&i| valid[i] && valid[(i + 1).saturating_sub(31)..=i].iter().filter(|&&v| v).count() >= 7)
            .count();
        assert_eq!(ws.len(), expected);
    }

    fn matrix(n_per_group: usize) -> FeatureMatrix {
        let cat: Vec<FeatureDescriptor> = default_catalog()
            .into_iter()
            .filter(|d| d.channel == "hr_mean" || d.channel == "z_hr_mean")
            .take(n_per_group)
            .collect();
        let rows = (0..40)
            .map(|i| FeatureRow {
                subject_id: "s".into(),
                anchor: MinuteIndex(i),
                label: Some(i % 2 == 0),
                kept: GroupFlags::all(),
                values: (0..cat.len())
                    .map(|j| (i % 2) as f64 * j as f64 + ((i * 7 + j as i64) % 5) as f64)
                    .collect(),
            })
            .collect();
        FeatureMatrix { descriptors: cat, rows }
    }

    #[test]
    fn selection_caps_per_group() {
        let fm = matrix(25);
        let sel = select_features(&fm, &SelectionConfig::default()).unwrap();
        assert_eq!(sel.len(), 20);
        let fm = matrix(12);
        assert_eq!(select_features(&fm, &SelectionConfig::default()).unwrap().len(), 12);
    }

    #[test]
    fn selection_needs_two_classes() {
        let mut fm = matrix(5);
        for r in &mut fm.rows {
            r.label = Some(true);
        }
        assert!(matches!(
            select_features(&fm, &SelectionConfig::default()),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn selection_ignores_row_and_column_order() {
        let fm = matrix(25);
        let base = select_features(&fm, &SelectionConfig::default()).unwrap();
        let mut shuffled = fm.clone();
        shuffled.rows.reverse();
        shuffled.rows.rotate_left(7);
        let perm: Vec<usize> = (0..fm.descriptors.len()).rev().collect();
        shuffled.descriptors = perm.iter().map(|&j| fm.descriptors[j].clone()).collect();
        for r in &mut shuffled.rows {
            r.values = perm.iter().map(|&j| r.values[j]).collect();
        }
        assert_eq!(select_features(&shuffled, &SelectionConfig::default()).unwrap(), base);
    }
}
