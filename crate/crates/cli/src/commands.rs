use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use bodyresp_core::classify::{
    loso_cv, smooth_events, train_cascade, CascadeRuntime, LosoPrediction, ModelCascade, StressPrediction, Tier,
};
use bodyresp_core::evaluate::{compute_metrics, permutation_test, MetricSet, SubjectDay};
use bodyresp_core::featurize::{
    default_catalog, featurize_subject, normalize_per_user, Catalog, FeatureMatrix, RowFilter,
};
use bodyresp_core::io;
use bodyresp_core::model::{minute_labels, EventSpan, GroupFlags, LabelEvent, MinuteIndex};
use bodyresp_core::pipeline::{process_subject, user_stats_unlabeled};
use bodyresp_core::synth::{generate_subject, TruthKind};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{sha256_bytes, verify_stage, Staging};
use crate::report::{self, LosoSection, Report, ThresholdMetrics, TierMetrics};

pub const PREPROCESS_DIR: &str = "preprocess";
pub const FEATURES_DIR: &str = "features";
pub const MODEL_DIR: &str = "model";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const EVALUATION_DIR: &str = "evaluation";
pub const REPORT_DIR: &str = "report";

pub const MODEL_FILE: &str = "model.json";
pub const FOLDS_FILE: &str = "folds.json";
pub const REPORT_JSON: &str = "report.json";

const MINUTES_PER_DAY: i64 = 1440;

pub struct Ctx {
    pub cfg: RunConfig,
    config_sha256: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let config_sha256 = sha256_bytes(serde_json::to_string(&cfg)?.as_bytes());
        Ok(Ctx { cfg, config_sha256 })
    }

    fn stage(&self, name: &str) -> PathBuf {
        self.cfg.paths.out.join(name)
    }

    fn commit(&self, st: Staging, command: &str, inputs: BTreeMap<String, String>) -> Result<()> {
        st.commit(command, self.cfg.seed, self.config_sha256.clone(), inputs)?;
        Ok(())
    }
}

fn group_labels(labels: Vec<(String, LabelEvent)>) -> BTreeMap<String, Vec<LabelEvent>> {
    let mut out: BTreeMap<String, Vec<LabelEvent>> = BTreeMap::new();
    for (s, l) in labels {
        out.entry(s).or_default().push(l);
    }
    out
}

pub fn synth(ctx: &Ctx) -> Result<()> {
    let scfg = ctx.cfg.synth();
    let st = Staging::new(&ctx.cfg.paths.data)?;
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for s in 0..scfg.n_subjects {
        let subject = generate_subject(&scfg, s)?;
        let id = subject.id().to_string();
        io::write_bundle(&st.path(&id), &subject.bundle)?;
        labels.extend(subject.labels.iter().map(|l| (id.clone(), *l)));
        truth.extend(subject.truth);
    }
    io::write_labels(&st.path(io::LABELS_FILE), &labels)?;
    io::write_truth(&st.path(io::TRUTH_FILE), &truth)?;
    ctx.commit(st, "synth", BTreeMap::new())
}

/// Minutes tables and confounder masks per subject. Sleep spans come from
/// `truth.csv` when the dataset has one. The labels travel along so later
/// stages depend on this stage alone.
pub fn preprocess(ctx: &Ctx) -> Result<()> {
    let data = &ctx.cfg.paths.data;
    let inputs = verify_stage(data, "synth", false)?;
    let subjects = io::list_subjects(data)?;
    if subjects.is_empty() {
        return Err(bodyresp_core::Error::MissingData(format!("{}: no subject directories", data.display())).into());
    }
    let labels = io::read_labels(&data.join(io::LABELS_FILE))?;
    let known: BTreeSet<&String> = subjects.iter().collect();
    if let Some((s, _)) = labels.iter().find(|(s, _)| !known.contains(s)) {
        return Err(bodyresp_core::Error::Data(format!(
            "{}: labels reference subject {s:?} with no stream directory",
            data.join(io::LABELS_FILE).display()
        ))
        .into());
    }
    let truth_path = data.join(io::TRUTH_FILE);
    let mut sleep: BTreeMap<String, Vec<EventSpan>> = BTreeMap::new();
    if truth_path.is_file() {
        for t in io::read_truth(&truth_path)?
            .into_iter()
            .filter(|t| t.kind == TruthKind::Sleep)
        {
            sleep.entry(t.subject_id).or_default().push(t.span);
        }
    }
    let by_subject = group_labels(labels.clone());
    let st = Staging::new(&ctx.stage(PREPROCESS_DIR))?;
    let stage = ctx.cfg.stage();
    for s in &subjects {
        let bundle = io::read_bundle(&io::subject_dir(data, s), s)?;
        let p = process_subject(
            &bundle,
            by_subject.get(s).map(Vec::as_slice).unwrap_or(&[]),
            sleep.get(s).map(Vec::as_slice).unwrap_or(&[]),
            &stage,
        )
        .with_context(|| format!("subject {s}"))?;
        io::write_minutes(&st.path(&format!("{s}/{}", io::MINUTES_FILE)), &p.table)?;
        io::write_mask(&st.path(&format!("{s}/{}", io::MASK_FILE)), &p.mask)?;
    }
    io::write_labels(&st.path(io::LABELS_FILE), &labels)?;
    ctx.commit(st, "preprocess", inputs)
}

fn prep_subjects(dir: &Path) -> Result<Vec<String>> {
    let mut v = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        if entry.path().join(io::MINUTES_FILE).is_file() {
            v.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    v.sort();
    Ok(v)
}

/// Window features for every minute with enough coverage.
pub fn featurize(ctx: &Ctx) -> Result<()> {
    let prep = ctx.stage(PREPROCESS_DIR);
    let inputs = verify_stage(&prep, "preprocess", true)?;
    let labels = group_labels(io::read_labels(&prep.join(io::LABELS_FILE))?);
    let catalog = Catalog::new(default_catalog())?;
    let mut fm = FeatureMatrix {
        descriptors: catalog.descriptors().to_vec(),
        rows: Vec::new(),
    };
    for s in prep_subjects(&prep)? {
        let table = io::read_minutes(&prep.join(&s).join(io::MINUTES_FILE))?;
        let marks = minute_labels(labels.get(&s).map(Vec::as_slice).unwrap_or(&[]));
        let stats = user_stats_unlabeled(&table, &marks);
        let normalized = normalize_per_user(&table, &stats).with_context(|| format!("subject {s}"))?;
        fm.rows.extend(featurize_subject(
            &s,
            &normalized,
            &marks,
            &catalog,
            &ctx.cfg.window,
            RowFilter::All,
        ));
    }
    let st = Staging::new(&ctx.stage(FEATURES_DIR))?;
    io::write_features(&st.path(io::FEATURES_FILE), &fm)?;
    ctx.commit(st, "featurize", inputs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldModel {
    pub subject_id: String,
    pub model: ModelCascade,
}

/// Leave-one-subject-out training plus a final cascade on every subject.
pub fn train(ctx: &Ctx) -> Result<()> {
    let feats = ctx.stage(FEATURES_DIR);
    let inputs = verify_stage(&feats, "featurize", true)?;
    let fm = io::read_features(&feats.join(io::FEATURES_FILE))?;
    let tc = ctx.cfg.train();
    let loso = loso_cv(&fm, &tc)?;
    let mut model = train_cascade(&fm, &tc)?;
    model.postprocess = ctx.cfg.postprocess;
    let folds: Vec<FoldModel> = loso
        .folds
        .iter()
        .map(|f| FoldModel {
            subject_id: f.subject_id.clone(),
            model: ModelCascade {
                postprocess: ctx.cfg.postprocess,
                ..f.model.clone()
            },
        })
        .collect();
    let preds: Vec<LosoPrediction> = loso.predictions().cloned().collect();
    let st = Staging::new(&ctx.stage(MODEL_DIR))?;
    io::write_atomic(&st.path(MODEL_FILE), (model.to_json()? + "\n").as_bytes())?;
    io::write_atomic(
        &st.path(FOLDS_FILE),
        (serde_json::to_string_pretty(&folds)? + "\n").as_bytes(),
    )?;
    io::write_loso(&st.path(io::LOSO_FILE), &preds)?;
    ctx.commit(st, "train", inputs)
}

fn read_model(path: &Path) -> Result<ModelCascade> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ModelCascade::from_json(&text).map_err(|e| anyhow!(e).context(format!("{}", path.display())))
}

/// Column of each tier descriptor in the feature matrix.
fn tier_columns(model: &ModelCascade, fm: &FeatureMatrix) -> Result<[Vec<usize>; 3]> {
    let mut out: [Vec<usize>; 3] = Default::default();
    for t in Tier::ALL {
        let m = model.tier(t).expect("validated cascade");
        out[t.index()] = m
            .descriptors
            .iter()
            .map(|d| {
                fm.column_index(d).ok_or_else(|| {
                    bodyresp_core::Error::Config(format!("feature {} missing from features.csv", d.name()))
                })
            })
            .collect::<bodyresp_core::Result<_>>()?;
    }
    Ok(out)
}

/// Cascade predictions and smoothed events. In evaluation mode each subject
/// is scored by the fold model that never saw it.
pub fn predict(ctx: &Ctx) -> Result<()> {
    let feats = ctx.stage(FEATURES_DIR);
    let model_dir = ctx.stage(MODEL_DIR);
    let mut inputs = verify_stage(&feats, "featurize", true)?;
    inputs.extend(verify_stage(&model_dir, "train", true)?);
    let fm = io::read_features(&feats.join(io::FEATURES_FILE))?;
    let threshold = ctx.cfg.mode.threshold();
    let mut full = read_model(&model_dir.join(MODEL_FILE))?;
    full.set_threshold(threshold);
    full.postprocess = ctx.cfg.postprocess;
    let mut folds: BTreeMap<String, ModelCascade> = BTreeMap::new();
    if ctx.cfg.mode == crate::config::Mode::Evaluation {
        let path = model_dir.join(FOLDS_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let parsed: Vec<FoldModel> = serde_json::from_str(&text)
            .map_err(|e| crate::config::ConfigError(format!("{}:{}: {e}", path.display(), e.line())))?;
        for mut f in parsed {
            f.model.validate()?;
            f.model.set_threshold(threshold);
            f.model.postprocess = ctx.cfg.postprocess;
            folds.insert(f.subject_id, f.model);
        }
    }

    let mut rows_by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in fm.rows.iter().enumerate() {
        rows_by_subject.entry(r.subject_id.as_str()).or_default().push(i);
    }
    let mut predictions: Vec<(String, StressPrediction)> = Vec::new();
    let mut events: Vec<(String, EventSpan)> = Vec::new();
    for (s, mut rows) in rows_by_subject {
        rows.sort_by_key(|&i| fm.rows[i].anchor);
        let model = folds.get(s).unwrap_or(&full);
        let runtime = CascadeRuntime::new(model)?;
        let cols = tier_columns(model, &fm)?;
        let start = fm.rows[rows[0]].anchor;
        let end = fm.rows[*rows.last().expect("non-empty")].anchor.offset(1);
        let mut flags = vec![false; (end.0 - start.0) as usize];
        for &i in &rows {
            let r = &fm.rows[i];
            let p = runtime.predict_with(r.anchor, r.kept, |t, _| {
                cols[t.index()].iter().map(|&c| r.values[c]).collect()
            });
            flags[(r.anchor.0 - start.0) as usize] = p.flag;
            predictions.push((s.to_string(), p));
        }
        events.extend(
            smooth_events(start, &flags, &model.postprocess)
                .into_iter()
                .map(|e| (s.to_string(), e)),
        );
    }
    let st = Staging::new(&ctx.stage(PREDICTIONS_DIR))?;
    io::write_predictions(&st.path(io::PREDICTIONS_FILE), &predictions)?;
    io::write_events(&st.path(io::EVENTS_FILE), &events)?;
    ctx.commit(st, "predict", inputs)
}

fn clip(span: EventSpan, lo: MinuteIndex, hi: MinuteIndex) -> Option<EventSpan> {
    let a = span.start().max(lo);
    let b = span.end().min(hi);
    (a < b).then(|| EventSpan::new(a, b).expect("non-empty clip"))
}

/// First and one-past-last predicted minute per subject.
fn prediction_axes(predictions: &[(String, StressPrediction)]) -> BTreeMap<String, (MinuteIndex, MinuteIndex)> {
    let mut axes: BTreeMap<String, (MinuteIndex, MinuteIndex)> = BTreeMap::new();
    for (s, p) in predictions {
        let e = axes.entry(s.clone()).or_insert((p.minute, p.minute.offset(1)));
        e.0 = e.0.min(p.minute);
        e.1 = e.1.max(p.minute.offset(1));
    }
    axes
}

/// Subject-days restricted to the minutes each subject was scored on; the
/// shuffle domain never extends past observed data.
pub fn subject_days(
    axes: &BTreeMap<String, (MinuteIndex, MinuteIndex)>,
    labels: &BTreeMap<String, Vec<LabelEvent>>,
    events: &BTreeMap<String, Vec<EventSpan>>,
) -> Vec<SubjectDay> {
    let mut days = Vec::new();
    for (s, &(start, end)) in axes {
        let first = start.0.div_euclid(MINUTES_PER_DAY);
        let last = (end.0 - 1).div_euclid(MINUTES_PER_DAY);
        for d in first..=last {
            let lo = MinuteIndex(d * MINUTES_PER_DAY).max(start);
            let hi = MinuteIndex((d + 1) * MINUTES_PER_DAY).min(end);
            let day_labels = labels
                .get(s)
                .into_iter()
                .flatten()
                .filter_map(|l| {
                    let c = clip(l.span(), lo, hi)?;
                    LabelEvent::new(c, l.polarity(), l.source(), l.likert()).ok()
                })
                .collect();
            let preds = events
                .get(s)
                .into_iter()
                .flatten()
                .filter_map(|e| clip(*e, lo, hi))
                .collect();
            days.push(SubjectDay {
                subject_id: s.clone(),
                start: lo,
                len: (hi.0 - lo.0) as usize,
                labels: day_labels,
                predictions: preds,
            });
        }
    }
    days
}

/// Metrics of pooled out-of-fold probabilities at `threshold`.
pub fn loso_metrics(preds: &[&LosoPrediction], tier: Option<Tier>, threshold: f64) -> Result<MetricSet> {
    let mut flags = Vec::new();
    let mut truth = Vec::new();
    let mut probs = Vec::new();
    for p in preds {
        let prob = match tier {
            Some(t) => p.tier_probs[t.index()],
            None => p.cascade_prob().map(|(_, v)| v),
        };
        if let Some(v) = prob {
            flags.push(v >= threshold);
            truth.push(Some(p.label));
            probs.push(Some(v));
        }
    }
    Ok(compute_metrics(&flags, &truth, Some(&probs))?)
}

pub const REPORT_THRESHOLDS: [f64; 2] = [0.50, 0.72];

fn loso_section(preds: &[LosoPrediction], mode_threshold: f64) -> Result<LosoSection> {
    let mut thresholds = REPORT_THRESHOLDS.to_vec();
    if !thresholds.contains(&mode_threshold) {
        thresholds.push(mode_threshold);
    }
    let common: Vec<&LosoPrediction> = preds
        .iter()
        .filter(|p| GroupFlags::all().is_subset_of(&p.available))
        .collect();
    let all: Vec<&LosoPrediction> = preds.iter().collect();
    let at = |rows: &[&LosoPrediction], tier: Option<Tier>| -> Result<Vec<ThresholdMetrics>> {
        thresholds
            .iter()
            .map(|&t| {
                Ok(ThresholdMetrics {
                    threshold: t,
                    metrics: loso_metrics(rows, tier, t)?,
                })
            })
            .collect()
    };
    let tiers = Tier::ALL
        .into_iter()
        .map(|t| {
            Ok(TierMetrics {
                tier: t,
                rows: common.len(),
                by_threshold: at(&common, Some(t))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LosoSection {
        rows: preds.len(),
        common_rows: common.len(),
        tiers,
        cascade: at(&all, None)?,
    })
}

/// Event-level adjusted metrics with a permutation null, plus the pooled
/// out-of-fold minute metrics from training.
pub fn evaluate(ctx: &Ctx) -> Result<()> {
    let prep = ctx.stage(PREPROCESS_DIR);
    let model_dir = ctx.stage(MODEL_DIR);
    let pred_dir = ctx.stage(PREDICTIONS_DIR);
    let mut inputs = verify_stage(&pred_dir, "predict", true)?;
    inputs.extend(verify_stage(&model_dir, "train", true)?);
    let labels_path = prep.join(io::LABELS_FILE);
    inputs.extend(
        verify_stage(&prep, "preprocess", true)?
            .into_iter()
            .filter(|(k, _)| k.ends_with(io::LABELS_FILE)),
    );

    let labels = group_labels(io::read_labels(&labels_path)?);
    let predictions = io::read_predictions(&pred_dir.join(io::PREDICTIONS_FILE))?;
    let mut events: BTreeMap<String, Vec<EventSpan>> = BTreeMap::new();
    for (s, e) in io::read_events(&pred_dir.join(io::EVENTS_FILE))? {
        events.entry(s).or_default().push(e);
    }
    let days = subject_days(&prediction_axes(&predictions), &labels, &events);
    if days.is_empty() {
        return Err(bodyresp_core::Error::MissingData("no predictions to evaluate".into()).into());
    }
    let ev = &ctx.cfg.evaluate;
    let mut perm = permutation_test(&days, ev.permutations, ctx.cfg.seed, ev.tolerance_min)?;
    if !ev.full_draws {
        for m in &mut perm.metrics {
            m.draws.clear();
        }
    }

    let mut flags = Vec::new();
    let mut truth = Vec::new();
    let mut probs = Vec::new();
    for (s, p) in &predictions {
        let marks = labels.get(s).map(|l| minute_labels(l)).unwrap_or_default();
        flags.push(p.flag);
        truth.push(marks.get(&p.minute).copied());
        probs.push(p.probability);
    }
    let minutes = compute_metrics(&flags, &truth, Some(&probs)).ok();

    let loso = io::read_loso(&model_dir.join(io::LOSO_FILE))?;
    let report = Report {
        seed: ctx.cfg.seed,
        mode: ctx.cfg.mode,
        threshold: ctx.cfg.mode.threshold(),
        loso: loso_section(&loso, ctx.cfg.mode.threshold())?,
        minutes,
        events: report::EventSection {
            tolerance_min: ev.tolerance_min,
            days: days.len(),
            predicted_events: days.iter().map(|d| d.predictions.len()).sum(),
            stress_labels: days
                .iter()
                .flat_map(|d| &d.labels)
                .filter(|l| l.polarity().is_stress())
                .count(),
            permutation: perm,
        },
        config: ctx.cfg.clone(),
    };
    let st = Staging::new(&ctx.stage(EVALUATION_DIR))?;
    io::write_atomic(
        &st.path(REPORT_JSON),
        (serde_json::to_string_pretty(&report)? + "\n").as_bytes(),
    )?;
    ctx.commit(st, "evaluate", inputs)
}

/// Flat metric table and the per-day ribbon plot.
pub fn report(ctx: &Ctx) -> Result<()> {
    let prep = ctx.stage(PREPROCESS_DIR);
    let eval_dir = ctx.stage(EVALUATION_DIR);
    let pred_dir = ctx.stage(PREDICTIONS_DIR);
    let mut inputs = verify_stage(&eval_dir, "evaluate", true)?;
    inputs.extend(verify_stage(&pred_dir, "predict", true)?);
    inputs.extend(
        verify_stage(&prep, "preprocess", true)?
            .into_iter()
            .filter(|(k, _)| k.ends_with(io::LABELS_FILE)),
    );

    let path = eval_dir.join(REPORT_JSON);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let rep: Report = serde_json::from_str(&text)
        .map_err(|e| crate::config::ConfigError(format!("{}:{}: {e}", path.display(), e.line())))?;
    let labels = group_labels(io::read_labels(&prep.join(io::LABELS_FILE))?);
    let predictions = io::read_predictions(&pred_dir.join(io::PREDICTIONS_FILE))?;
    let mut events: BTreeMap<String, Vec<EventSpan>> = BTreeMap::new();
    for (s, e) in io::read_events(&pred_dir.join(io::EVENTS_FILE))? {
        events.entry(s).or_default().push(e);
    }
    let days = subject_days(&prediction_axes(&predictions), &labels, &events);

    let st = Staging::new(&ctx.stage(REPORT_DIR))?;
    io::write_atomic(&st.path(report::REPORT_CSV), report::metric_rows_csv(&rep).as_bytes())?;
    io::write_atomic(&st.path(report::RIBBON_SVG), report::ribbon_svg(&days).as_bytes())?;
    ctx.commit(st, "report", inputs)
}
