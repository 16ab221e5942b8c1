//! Seeded synthetic subjects: TSST-like lab sessions and free-living days
//! with ground-truth arousal events, confounder episodes and label streams.
//!
//! Each (subject, day) is planned and rendered from its own counter-derived
//! random streams, so generation parallelises without changing the output.

pub mod plan;
pub mod render;
pub mod scheduler;
pub mod template;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EventSpan, LabelEvent, MinuteIndex, SignalBundle};
use crate::stats::derive_seed;

pub use plan::{
    gen_arousal_event, plan_free_living_day, plan_tsst_session, ArousalEvent, DayKind, DayPlan, ExerciseEpisode,
    SubjectProfile, TsstPeriod, WaterEpisode,
};
pub use render::render_day;
pub use scheduler::{schedule_day, Notification, NotificationKind, SchedulerConfig};
pub use template::{ArousalTemplate, Deltas, TemplateConfig};

/// 2024-01-01 00:00 UTC as an epoch minute.
pub const DEFAULT_BASE_MINUTE: i64 = 28_401_120;

/// Target missing-minute fractions per signal group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissingnessConfig {
    /// Share of all minutes without heart rate.
    pub hr: f64,
    /// Share of all minutes without usable HRV (includes HR gaps).
    pub hrv: f64,
    /// Share of waking minutes without EDA and skin temperature.
    pub eda: f64,
    /// Multiplier on all three rates inside lab sessions.
    pub tsst_scale: f64,
}

impl Default for MissingnessConfig {
    fn default() -> Self {
        MissingnessConfig {
            hr: 0.10,
            hrv: 0.39,
            eda: 0.05,
            tsst_scale: 0.25,
        }
    }
}

/// Expected confounder and activity episodes per free-living day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeRates {
    pub arousal: f64,
    pub exercise: f64,
    pub water: f64,
    pub loose_wear: f64,
    pub walking: f64,
}

impl Default for EpisodeRates {
    fn default() -> Self {
        EpisodeRates {
            arousal: 3.0,
            exercise: 0.7,
            water: 1.5,
            loose_wear: 1.0,
            walking: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    /// Free-living days per subject, generated before the lab session.
    pub days_per_subject: usize,
    pub tsst_session: bool,
    /// Probabilities of 1, 2, 3 and 4 arousal events in a lab session.
    pub tsst_event_probs: [f64; 4],
    /// Response amplitude multiplier (signal-to-noise knob).
    pub amplitude: f64,
    /// Share of subjects whose EDA responds to arousal.
    pub eda_responder_fraction: f64,
    pub template: TemplateConfig,
    pub rates: EpisodeRates,
    pub missing: MissingnessConfig,
    pub scheduler: SchedulerConfig,
    /// Chance that an arousal event prompts a notification shortly after.
    pub trigger_probability: f64,
    pub false_triggers_per_day: f64,
    /// Chance a subject names stress when asked about an arousal EDA rise.
    pub survey_stress_probability: f64,
    /// Chance of each of -1 and +1 jitter on a stress-log score.
    pub likert_jitter: f64,
    pub utc_offset_minutes: i64,
    pub eda_rate_hz: u32,
    pub base_minute: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 10,
            days_per_subject: 0,
            tsst_session: true,
            tsst_event_probs: [0.40, 0.35, 0.15, 0.10],
            amplitude: 1.0,
            eda_responder_fraction: 0.7,
            template: TemplateConfig::default(),
            rates: EpisodeRates::default(),
            missing: MissingnessConfig::default(),
            scheduler: SchedulerConfig::default(),
            trigger_probability: 0.6,
            false_triggers_per_day: 2.0,
            survey_stress_probability: 0.85,
            likert_jitter: 0.2,
            utc_offset_minutes: 0,
            eda_rate_hz: 200,
            base_minute: DEFAULT_BASE_MINUTE,
            seed: 0,
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
    }
    Ok(())
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::Config("n_subjects must be positive".into()));
        }
        if self.days_per_subject == 0 && !self.tsst_session {
            return Err(Error::Config("nothing to generate: no days and no lab session".into()));
        }
        check_rate("amplitude", self.amplitude)?;
        let r = &self.rates;
        for (name, v) in [
            ("rates.arousal", r.arousal),
            ("rates.exercise", r.exercise),
            ("rates.water", r.water),
            ("rates.loose_wear", r.loose_wear),
            ("rates.walking", r.walking),
            ("false_triggers_per_day", self.false_triggers_per_day),
            ("missing.tsst_scale", self.missing.tsst_scale),
        ] {
            check_rate(name, v)?;
        }
        for (name, v) in [
            ("missing.hr", self.missing.hr),
            ("missing.hrv", self.missing.hrv),
            ("missing.eda", self.missing.eda),
            ("eda_responder_fraction", self.eda_responder_fraction),
            ("trigger_probability", self.trigger_probability),
            ("survey_stress_probability", self.survey_stress_probability),
        ] {
            check_probability(name, v)?;
        }
        if self.missing.hr > 0.5 || self.missing.hrv > 0.8 || self.missing.eda > 0.5 {
            return Err(Error::Config("missingness targets too high to place".into()));
        }
        if self.missing.hrv < self.missing.hr {
            return Err(Error::Config("missing.hrv must be at least missing.hr".into()));
        }
        check_probability("likert_jitter", self.likert_jitter)?;
        if self.likert_jitter > 0.5 {
            return Err(Error::Config("likert_jitter must be at most 0.5".into()));
        }
        let p = &self.tsst_event_probs;
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "tsst_event_probs must be >= 0 and sum to 1, got {p:?}"
            )));
        }
        if self.eda_rate_hz == 0 || 1000 % self.eda_rate_hz != 0 {
            return Err(Error::Config(format!(
                "eda_rate_hz must divide 1000, got {}",
                self.eda_rate_hz
            )));
        }
        if self.utc_offset_minutes.abs() > 14 * 60 {
            return Err(Error::Config("utc_offset_minutes outside +-14 h".into()));
        }
        self.scheduler.validate()?;
        Ok(())
    }

    /// Day index of the lab session, after every free-living day.
    pub fn tsst_day(&self) -> usize {
        self.days_per_subject
    }

    pub fn n_days(&self) -> usize {
        self.days_per_subject + usize::from(self.tsst_session)
    }

    /// UTC epoch minute of local midnight starting `day`.
    pub fn local_midnight(&self, day: usize) -> MinuteIndex {
        MinuteIndex(self.base_minute + day as i64 * 1440 - self.utc_offset_minutes)
    }
}

/// Stream purposes for seed derivation.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Stream {
    Profile = 1,
    Plan = 2,
    Latent = 3,
    Hr = 4,
    Rr = 5,
    Eda = 6,
    St = 7,
    Pressure = 8,
    Accel = 9,
}

pub(crate) fn stream_rng(seed: u64, subject: usize, day: usize, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[subject as u64, day as u64, stream as u64]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    Arousal,
    Exercise,
    Water,
    LooseWear,
    Sleep,
}

impl TruthKind {
    pub const ALL: [TruthKind; 5] = [
        TruthKind::Arousal,
        TruthKind::Exercise,
        TruthKind::Water,
        TruthKind::LooseWear,
        TruthKind::Sleep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TruthKind::Arousal => "arousal",
            TruthKind::Exercise => "exercise",
            TruthKind::Water => "water",
            TruthKind::LooseWear => "loose_wear",
            TruthKind::Sleep => "sleep",
        }
    }
}

impl std::str::FromStr for TruthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TruthKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown truth kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub subject_id: String,
    pub span: EventSpan,
    pub kind: TruthKind,
}

/// One generated subject with everything the pipeline and the tests need.
#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub profile: SubjectProfile,
    pub plans: Vec<DayPlan>,
    pub bundle: SignalBundle,
    pub labels: Vec<LabelEvent>,
    pub truth: Vec<TruthRecord>,
}

impl SyntheticSubject {
    pub fn id(&self) -> &str {
        &self.profile.id
    }

    /// Truth spans of one kind, in time order.
    pub fn truth_spans(&self, kind: TruthKind) -> Vec<EventSpan> {
        self.truth.iter().filter(|t| t.kind == kind).map(|t| t.span).collect()
    }
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

/// Plans every day of one subject without rendering any stream.
pub fn plan_subject(cfg: &SynthConfig, subject: usize) -> Result<(SubjectProfile, Vec<DayPlan>)> {
    cfg.validate()?;
    let profile = SubjectProfile::draw(cfg, subject);
    let mut plans = Vec::with_capacity(cfg.n_days());
    for day in 0..cfg.days_per_subject {
        plans.push(plan_free_living_day(cfg, &profile, day)?);
    }
    if cfg.tsst_session {
        plans.push(plan_tsst_session(cfg, &profile, cfg.tsst_day())?);
    }
    Ok((profile, plans))
}

fn concat_bundles(id: &str, parts: Vec<SignalBundle>) -> SignalBundle {
    let mut b = SignalBundle::new(id);
    for p in parts {
        b.hr_1hz.extend(p.hr_1hz);
        b.rr.extend(p.rr);
        b.eda_200hz.extend(p.eda_200hz);
        b.skin_temp.extend(p.skin_temp);
        b.accel_minutes.extend(p.accel_minutes);
        b.pressure.extend(p.pressure);
    }
    b
}

/// Plans and renders one subject. Days render in parallel.
pub fn generate_subject(cfg: &SynthConfig, subject: usize) -> Result<SyntheticSubject> {
    let (profile, plans) = plan_subject(cfg, subject)?;
    let parts: Vec<SignalBundle> = plans.par_iter().map(|p| render_day(cfg, &profile, p)).collect();
    let bundle = concat_bundles(&profile.id, parts);
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for p in &plans {
        labels.extend(p.labels.iter().copied());
        truth.extend(p.truth(&profile.id));
    }
    Ok(SyntheticSubject {
        profile,
        plans,
        bundle,
        labels,
        truth,
    })
}

/// Generates every subject in id order.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<SyntheticSubject>> {
    cfg.validate()?;
    (0..cfg.n_subjects)
        .into_par_iter()
        .map(|s| generate_subject(cfg, s))
        .collect()
}

#[cfg(test)]
mod tests;
