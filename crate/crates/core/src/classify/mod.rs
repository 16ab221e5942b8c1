//! Tiered stress classifiers, threshold pinning, the availability cascade
//! and event post-processing.

pub mod logreg;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use logreg::{class_weights, train_logreg, weighted_log_loss, LogRegConfig, LogRegFit};

use crate::error::{Error, Result};
use crate::featurize::{
    select_features, window_for, Catalog, FeatureDescriptor, FeatureMatrix, NormalizedTable, SelectionConfig,
    WindowConfig,
};
use crate::model::{EventSpan, GroupFlags, MinuteIndex, SignalGroup};
use crate::stats::{derive_seed, sigmoid};

pub const FORMAT_VERSION: u32 = 1;
pub const EVALUATION_THRESHOLD: f64 = 0.50;
pub const PRODUCTION_THRESHOLD: f64 = 0.72;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    EdaSt,
    EdaStHr,
    EdaStHrHrv,
}

impl Tier {
    /// Smallest to largest.
    pub const ALL: [Tier; 3] = [Tier::EdaSt, Tier::EdaStHr, Tier::EdaStHrHrv];

    pub fn groups(self) -> GroupFlags {
        use SignalGroup::*;
        match self {
            Tier::EdaSt => GroupFlags::of(&[Eda, St]),
            Tier::EdaStHr => GroupFlags::of(&[Eda, St, Hr]),
            Tier::EdaStHrHrv => GroupFlags::all(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::EdaSt => "eda_st",
            Tier::EdaStHr => "eda_st_hr",
            Tier::EdaStHrHrv => "eda_st_hr_hrv",
        }
    }

    /// Largest tier whose groups are all available.
    pub fn choose(available: GroupFlags) -> Option<Tier> {
        Tier::ALL
            .into_iter()
            .rev()
            .find(|t| t.groups().is_subset_of(&available))
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown tier {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub lambda: f64,
    pub class_weights: [f64; 2],
    pub n_rows: usize,
    pub n_positive: usize,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieredModel {
    pub tier: Tier,
    pub threshold: f64,
    pub descriptors: Vec<FeatureDescriptor>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardization: Vec<(f64, f64)>,
    pub train_meta: TrainMeta,
}

impl TieredModel {
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        sigmoid(self.intercept + self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>())
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.descriptors.len() || self.standardization.len() != self.descriptors.len() {
            return Err(Error::Config(format!(
                "tier {}: {} descriptors but {} weights",
                self.tier,
                self.descriptors.len(),
                self.weights.len()
            )));
        }
        for d in &self.descriptors {
            let g = d.feature_channel()?.group();
            if !self.tier.groups().get(g) {
                return Err(Error::Config(format!("tier {} cannot use {}", self.tier, d.name())));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostProcess {
    pub min_duration_min: i64,
    pub stitch_gap_min: i64,
}

impl Default for PostProcess {
    fn default() -> Self {
        PostProcess {
            min_duration_min: 3,
            stitch_gap_min: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCascade {
    pub format_version: u32,
    pub tiers: Vec<TieredModel>,
    pub postprocess: PostProcess,
}

impl ModelCascade {
    pub fn tier(&self, t: Tier) -> Option<&TieredModel> {
        self.tiers.iter().find(|m| m.tier == t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} not supported",
                self.format_version
            )));
        }
        for t in Tier::ALL {
            if self.tier(t).is_none() {
                return Err(Error::Config(format!("model lacks tier {t}")));
            }
        }
        self.tiers.iter().try_for_each(TieredModel::validate)
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        for t in &mut self.tiers {
            t.threshold = threshold;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelCascade = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressPrediction {
    pub minute: MinuteIndex,
    pub probability: Option<f64>,
    pub tier: Option<Tier>,
    pub flag: bool,
}

/// A cascade with each tier's descriptors resolved for evaluation.
pub struct CascadeRuntime<'a> {
    cascade: &'a ModelCascade,
    catalogs: Vec<(Tier, Catalog)>,
}

impl<'a> CascadeRuntime<'a> {
    pub fn new(cascade: &'a ModelCascade) -> Result<Self> {
        cascade.validate()?;
        let catalogs = cascade
            .tiers
            .iter()
            .map(|m| Ok((m.tier, Catalog::new(m.descriptors.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CascadeRuntime { cascade, catalogs })
    }

    pub fn cascade(&self) -> &ModelCascade {
        self.cascade
    }

    /// Prediction for one minute given its group availability. `features`
    /// is asked for the chosen tier's feature vector only.
    pub fn predict_with(
        &self,
        minute: MinuteIndex,
        available: GroupFlags,
        features: impl FnOnce(Tier, &Catalog) -> Vec<f64>,
    ) -> StressPrediction {
        let Some(tier) = Tier::choose(available) else {
            return StressPrediction {
                minute,
                probability: None,
                tier: None,
                flag: false,
            };
        };
        let model = self.cascade.tier(tier).expect("validated cascade has every tier");
        let cat = &self
            .catalogs
            .iter()
            .find(|(t, _)| *t == tier)
            .expect("catalog per tier")
            .1;
        let p = model.predict_proba(&features(tier, cat));
        StressPrediction {
            minute,
            probability: Some(p),
            tier: Some(tier),
            flag: p >= model.threshold,
        }
    }

    /// Predictions for every minute of a subject's normalized table.
    pub fn predict_table(&self, table: &NormalizedTable, wcfg: &WindowConfig) -> Vec<StressPrediction> {
        (0..table.len())
            .into_par_iter()
            .map(|i| {
                let minute = table.start.offset(i as i64);
                match window_for(table, minute, wcfg) {
                    Some(w) => self.predict_with(minute, w.kept, |_, cat| cat.evaluate(&w)),
                    None => self.predict_with(minute, GroupFlags::none(), |_, _| Vec::new()),
                }
            })
            .collect()
    }
}

/// Availability-cascade prediction for one minute.
pub fn cascade_predict(
    runtime: &CascadeRuntime<'_>,
    minute: MinuteIndex,
    available: GroupFlags,
    features: impl FnOnce(Tier, &Catalog) -> Vec<f64>,
) -> StressPrediction {
    runtime.predict_with(minute, available, features)
}

/// Maximal runs of true flags as events, runs shorter than the minimum
/// duration discarded, then events closer than the stitch gap merged.
pub fn smooth_events(start: MinuteIndex, flags: &[bool], pp: &PostProcess) -> Vec<EventSpan> {
    let mut runs: Vec<(i64, i64)> = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            let s = i;
            while i < flags.len() && flags[i] {
                i += 1;
            }
            if (i - s) as i64 >= pp.min_duration_min {
                runs.push((s as i64, i as i64));
            }
        } else {
            i += 1;
        }
    }
    let mut merged: Vec<(i64, i64)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(last) if r.0 - last.1 < pp.stitch_gap_min => last.1 = r.1,
            _ => merged.push(r),
        }
    }
    merged
        .into_iter()
        .map(|(s, e)| EventSpan::new(start.offset(s), start.offset(e)).expect("non-empty run"))
        .collect()
}

/// Per-minute flags covered by `events` over `len` minutes from `start`.
pub fn events_to_flags(start: MinuteIndex, len: usize, events: &[EventSpan]) -> Vec<bool> {
    let mut out = vec![false; len];
    for e in events {
        for m in e.minutes() {
            let i = m.0 - start.0;
            if i >= 0 && (i as usize) < len {
                out[i as usize] = true;
            }
        }
    }
    out
}

fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    if v == 0.0 {
        return f64::from_bits(1);
    }
    let bits = v.to_bits();
    f64::from_bits(if v > 0.0 { bits + 1 } else { bits - 1 })
}

/// False-positive rate of `probs >= threshold` among negatives.
pub fn fpr_at(probs: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let neg = labels.iter().filter(|&&l| !l).count();
    let fp = probs.iter().zip(labels).filter(|(&p, &l)| !l && p >= threshold).count();
    fp as f64 / neg as f64
}

/// Candidate thresholds: 0 and the value just above each distinct
/// negative-class probability, ascending.
pub fn threshold_candidates(probs: &[f64], labels: &[bool]) -> Vec<f64> {
    let mut c: Vec<f64> = probs
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&p, _)| next_up(p))
        .collect();
    c.push(0.0);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Smallest candidate threshold whose false-positive rate is at most
/// `target_fpr`.
pub fn pin_fpr(probs: &[f64], labels: &[bool], target_fpr: f64) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Metric("probabilities and labels differ in length".into()));
    }
    if !labels.iter().any(|&l| !l) {
        return Err(Error::Metric("no negative labels to pin a false-positive rate".into()));
    }
    let mut neg: Vec<f64> = probs.iter().zip(labels).filter(|(_, &l)| !l).map(|(&p, _)| p).collect();
    neg.sort_by(f64::total_cmp);
    let n = neg.len() as f64;
    for t in threshold_candidates(probs, labels) {
        let fp = neg.len() - neg.partition_point(|&p| p < t);
        if fp as f64 / n <= target_fpr {
            return Ok(t);
        }
    }
    unreachable!("the largest candidate has no false positives")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub logreg: LogRegConfig,
    pub selection: SelectionConfig,
    pub window: WindowConfig,
    pub threshold: f64,
    /// When non-empty, lambda is chosen per tier by inner leave-one-subject-out
    /// balanced accuracy.
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            logreg: LogRegConfig::default(),
            selection: SelectionConfig::default(),
            window: WindowConfig::default(),
            threshold: EVALUATION_THRESHOLD,
            lambda_grid: Vec::new(),
            seed: 0,
        }
    }
}

/// Design matrix, labels and source row indices.
type TierData = (Vec<Vec<f64>>, Vec<bool>, Vec<usize>);

/// Labeled rows usable by a tier, projected onto its descriptors.
fn tier_data(fm: &FeatureMatrix, rows: &[usize], tier: Tier, descriptors: &[FeatureDescriptor]) -> Result<TierData> {
    let cols = descriptors
        .iter()
        .map(|d| {
            fm.column_index(d)
                .ok_or_else(|| Error::Config(format!("feature {} not in matrix", d.name())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut idx = Vec::new();
    for &i in rows {
        let r = &fm.rows[i];
        if let Some(label) = r.label {
            if tier.groups().is_subset_of(&r.kept) {
                x.push(cols.iter().map(|&c| r.values[c]).collect());
                y.push(label);
                idx.push(i);
            }
        }
    }
    Ok((x, y, idx))
}

fn tier_descriptors(selected: &[FeatureDescriptor], tier: Tier) -> Vec<FeatureDescriptor> {
    selected
        .iter()
        .filter(|d| {
            d.feature_channel()
                .map(|c| tier.groups().get(c.group()))
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

fn fit_tier(
    fm: &FeatureMatrix,
    rows: &[usize],
    selected: &[FeatureDescriptor],
    tier: Tier,
    lambda: f64,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TieredModel> {
    let descriptors = tier_descriptors(selected, tier);
    let (x, y, _) = tier_data(fm, rows, tier, &descriptors)?;
    let lr = LogRegConfig { lambda, ..cfg.logreg };
    let fit = train_logreg(&x, &y, &lr, seed).map_err(|e| match e {
        Error::Train(m) => Error::Train(format!("tier {tier}: {m}")),
        other => other,
    })?;
    Ok(TieredModel {
        tier,
        threshold: cfg.threshold,
        descriptors,
        train_meta: TrainMeta {
            seed,
            lambda,
            class_weights: fit.class_weights,
            n_rows: y.len(),
            n_positive: y.iter().filter(|&&v| v).count(),
            iterations: fit.iterations,
            objective: fit.objective,
        },
        weights: fit.weights,
        intercept: fit.intercept,
        standardization: fit.standardization,
    })
}

fn subjects_of(fm: &FeatureMatrix, rows: &[usize]) -> Vec<String> {
    let mut s: Vec<String> = rows.iter().map(|&i| fm.rows[i].subject_id.clone()).collect();
    s.sort();
    s.dedup();
    s
}

/// Chooses lambda from the grid by inner leave-one-subject-out balanced
/// accuracy at the configured threshold; the smallest lambda wins ties.
fn tune_lambda(
    fm: &FeatureMatrix,
    rows: &[usize],
    selected: &[FeatureDescriptor],
    tier: Tier,
    cfg: &TrainConfig,
    seed: u64,
) -> f64 {
    let subjects = subjects_of(fm, rows);
    if cfg.lambda_grid.is_empty() || subjects.len() < 3 {
        return cfg.logreg.lambda;
    }
    let descriptors = tier_descriptors(selected, tier);
    let mut best = (f64::NEG_INFINITY, cfg.logreg.lambda);
    for &lambda in &cfg.lambda_grid {
        let mut counts = [0usize; 4]; // tp, fn, tn, fp
        for s in &subjects {
            let train: Vec<usize> = rows.iter().copied().filter(|&i| &fm.rows[i].subject_id != s).collect();
            let test: Vec<usize> = rows.iter().copied().filter(|&i| &fm.rows[i].subject_id == s).collect();
            let Ok(model) = fit_tier(fm, &train, selected, tier, lambda, cfg, seed) else {
                continue;
            };
            let Ok((x, y, _)) = tier_data(fm, &test, tier, &descriptors) else {
                continue;
            };
            for (row, label) in x.iter().zip(y) {
                let flag = model.predict_proba(row) >= cfg.threshold;
                counts[match (label, flag) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, false) => 2,
                    (false, true) => 3,
                }] += 1;
            }
        }
        let sens = counts[0] as f64 / (counts[0] + counts[1]).max(1) as f64;
        let spec = counts[2] as f64 / (counts[2] + counts[3]).max(1) as f64;
        let ba = (sens + spec) / 2.0;
        if ba > best.0 {
            best = (ba, lambda);
        }
    }
    best.1
}

/// Selects features and trains all three tiers on the given rows.
pub fn train_cascade_on(fm: &FeatureMatrix, rows: &[usize], cfg: &TrainConfig, seed: u64) -> Result<ModelCascade> {
    let sub = FeatureMatrix {
        descriptors: fm.descriptors.clone(),
        rows: rows.iter().map(|&i| fm.rows[i].clone()).collect(),
    };
    let selected = select_features(&sub, &cfg.selection)?;
    let tiers = Tier::ALL
        .into_iter()
        .map(|tier| {
            let tseed = derive_seed(seed, &[tier.index() as u64]);
            let lambda = tune_lambda(fm, rows, &selected, tier, cfg, tseed);
            fit_tier(fm, rows, &selected, tier, lambda, cfg, tseed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelCascade {
        format_version: FORMAT_VERSION,
        tiers,
        postprocess: PostProcess::default(),
    })
}

pub fn train_cascade(fm: &FeatureMatrix, cfg: &TrainConfig) -> Result<ModelCascade> {
    let rows: Vec<usize> = (0..fm.rows.len()).filter(|&i| fm.rows[i].label.is_some()).collect();
    train_cascade_on(fm, &rows, cfg, cfg.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosoPrediction {
    pub subject_id: String,
    pub minute: MinuteIndex,
    pub label: bool,
    /// Availability of the row's window.
    pub available: GroupFlags,
    /// Probability from each tier whose groups are available.
    pub tier_probs: [Option<f64>; 3],
}

impl LosoPrediction {
    /// Probability from the largest available tier.
    pub fn cascade_prob(&self) -> Option<(Tier, f64)> {
        let t = Tier::choose(self.available)?;
        self.tier_probs[t.index()].map(|p| (t, p))
    }
}

#[derive(Debug, Clone)]
pub struct LosoFold {
    pub subject_id: String,
    pub model: ModelCascade,
    pub predictions: Vec<LosoPrediction>,
}

#[derive(Debug, Clone)]
pub struct LosoResult {
    pub folds: Vec<LosoFold>,
}

impl LosoResult {
    pub fn predictions(&self) -> impl Iterator<Item = &LosoPrediction> {
        self.folds.iter().flat_map(|f| f.predictions.iter())
    }

    /// Pooled (probability, label) pairs for a tier, restricted to rows
    /// where `restrict` groups are all available.
    pub fn pooled(&self, tier: Tier, restrict: GroupFlags) -> (Vec<f64>, Vec<bool>) {
        let mut p = Vec::new();
        let mut y = Vec::new();
        for r in self.predictions() {
            if restrict.is_subset_of(&r.available) {
                if let Some(v) = r.tier_probs[tier.index()] {
                    p.push(v);
                    y.push(r.label);
                }
            }
        }
        (p, y)
    }

    /// Pooled cascade (probability, label) pairs over every row some tier
    /// could score.
    pub fn pooled_cascade(&self) -> (Vec<f64>, Vec<bool>) {
        self.predictions()
            .filter_map(|r| r.cascade_prob().map(|(_, p)| (p, r.label)))
            .unzip()
    }
}

/// Leave-one-subject-out cross-validation. Feature selection and any lambda
/// tuning see only the training subjects of each fold.
pub fn loso_cv(fm: &FeatureMatrix, cfg: &TrainConfig) -> Result<LosoResult> {
    let labeled: Vec<usize> = (0..fm.rows.len()).filter(|&i| fm.rows[i].label.is_some()).collect();
    let subjects = subjects_of(fm, &labeled);
    if subjects.len() < 2 {
        return Err(Error::Config(format!(
            "cross-validation needs at least 2 labeled subjects, got {}",
            subjects.len()
        )));
    }
    let folds = subjects
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let train: Vec<usize> = labeled
                .iter()
                .copied()
                .filter(|&i| &fm.rows[i].subject_id != s)
                .collect();
            let test: Vec<usize> = labeled
                .iter()
                .copied()
                .filter(|&i| &fm.rows[i].subject_id == s)
                .collect();
            let model = train_cascade_on(fm, &train, cfg, derive_seed(cfg.seed, &[k as u64]))?;
            let catalogs: Vec<(Vec<usize>, &TieredModel)> = Tier::ALL
                .into_iter()
                .map(|t| {
                    let m = model.tier(t).expect("all tiers trained");
                    let cols = m
                        .descriptors
                        .iter()
                        .map(|d| fm.column_index(d).expect("descriptor from this matrix"))
                        .collect();
                    (cols, m)
                })
                .collect();
            let predictions = test
                .iter()
                .map(|&i| {
                    let r = &fm.rows[i];
                    let mut tier_probs = [None; 3];
                    for (t, (cols, m)) in Tier::ALL.into_iter().zip(&catalogs) {
                        if t.groups().is_subset_of(&r.kept) {
                            let x: Vec<f64> = cols.iter().map(|&c| r.values[c]).collect();
                            tier_probs[t.index()] = Some(m.predict_proba(&x));
                        }
                    }
                    LosoPrediction {
                        subject_id: s.clone(),
                        minute: r.anchor,
                        label: r.label.expect("labeled row"),
                        available: r.kept,
                        tier_probs,
                    }
                })
                .collect();
            Ok(LosoFold {
                subject_id: s.clone(),
                model,
                predictions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LosoResult { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(ev: &[EventSpan]) -> Vec<(i64, i64)> {
        ev.iter().map(|e| (e.start().0, e.end().0)).collect()
    }

    fn flags_from(runs: &[(usize, usize)], len: usize) -> Vec<bool> {
        let mut f = vec![false; len];
        for &(s, e) in runs {
            f[s..e].iter_mut().for_each(|v| *v = true);
        }
        f
    }

    #[test]
    fn smoothing_examples() {
        let pp = PostProcess::default();
        let z = MinuteIndex(0);
        assert!(smooth_events(z, &flags_from(&[(4, 6)], 20), &pp).is_empty());
        assert_eq!(
            spans(&smooth_events(z, &flags_from(&[(0, 3), (7, 10)], 20), &pp)),
            vec![(0, 10)]
        );
        assert_eq!(
            spans(&smooth_events(z, &flags_from(&[(0, 3), (8, 11)], 20), &pp)),
            vec![(0, 3), (8, 11)]
        );
        // a short run between two events is discarded before stitching
        assert_eq!(
            spans(&smooth_events(z, &flags_from(&[(0, 3), (9, 10), (14, 17)], 20), &pp)),
            vec![(0, 3), (14, 17)]
        );
    }

    #[test]
    fn tier_choice() {
        use SignalGroup::*;
        assert_eq!(Tier::choose(GroupFlags::all()), Some(Tier::EdaStHrHrv));
        assert_eq!(Tier::choose(GroupFlags::all().with(Hrv, false)), Some(Tier::EdaStHr));
        assert_eq!(Tier::choose(GroupFlags::of(&[Eda, St, Hrv])), Some(Tier::EdaSt));
        assert_eq!(Tier::choose(GroupFlags::all().with(Eda, false)), None);
    }

    #[test]
    fn pin_fpr_extremes() {
        let probs = [0.1, 0.4, 0.35, 0.8, 0.9];
        let labels = [false, false, true, true, false];
        let t0 = pin_fpr(&probs, &labels, 0.0).unwrap();
        assert!(t0 > 0.9 && t0 < 0.9 + 1e-15);
        assert_eq!(fpr_at(&probs, &labels, t0), 0.0);
        let t1 = pin_fpr(&probs, &labels, 1.0).unwrap();
        assert_eq!(t1, 0.0);
        assert_eq!(fpr_at(&probs, &labels, t1), 1.0);
        assert!(matches!(pin_fpr(&[0.3], &[true], 0.1), Err(Error::Metric(_))));
    }

    #[test]
    fn tier_round_trip() {
        for t in Tier::ALL {
            assert_eq!(t.as_str().parse::<Tier>().unwrap(), t);
        }
    }
}
