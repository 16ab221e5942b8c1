//! Per-day plans: what happens when, before any sample is drawn.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::scheduler::{schedule_day, NotificationKind};
use super::template::ArousalTemplate;
use super::{stream_rng, subject_id, Stream, SynthConfig, TruthKind, TruthRecord};
use crate::error::{Error, Result};
use crate::model::{
    eda_survey_to_label, stress_log_to_label, EventSpan, LabelEvent, LabelSource, LookbackChoice, MinuteIndex,
    Polarity, SurveyResponse,
};

/// Stable per-subject physiology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub id: String,
    pub index: usize,
    pub hr_base_bpm: f64,
    pub rmssd_base_ms: f64,
    pub eda_base_us: f64,
    pub eda_noise_us: f64,
    pub st_base_c: f64,
    /// HR response at amplitude 1.
    pub hr_amp_bpm: f64,
    /// EDA response at amplitude 1; zero for non-responders.
    pub eda_amp_us: f64,
}

impl SubjectProfile {
    pub fn draw(cfg: &SynthConfig, index: usize) -> Self {
        let mut rng = stream_rng(cfg.seed, index, usize::MAX, Stream::Profile);
        let t = &cfg.template;
        let hr_base_bpm = rng.random_range(60.0..78.0);
        let rmssd_base_ms = rng.random_range(25.0..60.0);
        let eda_base_us = rng.random_range(1.0..5.0);
        let eda_noise_us = rng.random_range(0.5..1.0) * t.eda_noise_us;
        let st_base_c = rng.random_range(32.0..34.5);
        let hr_amp_bpm = rng.random_range(t.hr_amp_bpm.0..=t.hr_amp_bpm.1);
        let eda_amp = rng.random_range(t.eda_amp_us.0..=t.eda_amp_us.1);
        let responder = rng.random_bool(cfg.eda_responder_fraction);
        SubjectProfile {
            id: subject_id(index),
            index,
            hr_base_bpm,
            rmssd_base_ms,
            eda_base_us,
            eda_noise_us,
            st_base_c,
            hr_amp_bpm,
            eda_amp_us: if responder { eda_amp } else { 0.0 },
        }
    }

    pub fn eda_responder(&self) -> bool {
        self.eda_amp_us > 0.0
    }

    /// This subject's response to an event of `duration_min` at amplitude 1.
    pub fn template(&self, cfg: &SynthConfig, duration_min: i64) -> ArousalTemplate {
        ArousalTemplate {
            duration_min: duration_min as f64,
            hr_amp_bpm: self.hr_amp_bpm,
            eda_amp_us: self.eda_amp_us,
            hrv_dip: cfg.template.hrv_dip,
            st_drop_c: cfg.template.st_drop_c,
            shape: cfg.template,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArousalEvent {
    pub span: EventSpan,
    /// Response with amplitude and per-event jitter applied.
    pub template: ArousalTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExerciseEpisode {
    pub span: EventSpan,
    pub hr_gain_bpm: f64,
    pub sweat_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterEpisode {
    pub span: EventSpan,
    /// EDA rise while wet (uS per minute).
    pub eda_rate_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsstPeriod {
    Baseline,
    Anticipation,
    Stressor,
    Debrief,
    Recovery,
}

impl TsstPeriod {
    pub const SEQUENCE: [(TsstPeriod, i64); 5] = [
        (TsstPeriod::Baseline, 15),
        (TsstPeriod::Anticipation, 10),
        (TsstPeriod::Stressor, 10),
        (TsstPeriod::Debrief, 10),
        (TsstPeriod::Recovery, 15),
    ];

    pub fn session_minutes() -> i64 {
        Self::SEQUENCE.iter().map(|p| p.1).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayKind {
    FreeLiving,
    Tsst,
}

/// Everything scheduled for one rendered span of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    pub subject: usize,
    pub day: usize,
    pub kind: DayKind,
    pub start: MinuteIndex,
    /// Exclusive.
    pub end: MinuteIndex,
    pub local_midnight: MinuteIndex,
    pub arousal: Vec<ArousalEvent>,
    pub exercise: Vec<ExerciseEpisode>,
    pub water: Vec<WaterEpisode>,
    pub loose_wear: Vec<EventSpan>,
    pub walking: Vec<EventSpan>,
    /// EDA is not worn while asleep.
    pub sleep: Vec<EventSpan>,
    /// No HR samples and no beats.
    pub hr_gaps: Vec<EventSpan>,
    /// No beats.
    pub rr_gaps: Vec<EventSpan>,
    /// No EDA samples.
    pub eda_gaps: Vec<EventSpan>,
    pub session: Vec<(TsstPeriod, EventSpan)>,
    pub notifications: Vec<(MinuteIndex, NotificationKind)>,
    pub labels: Vec<LabelEvent>,
}

impl DayPlan {
    fn empty(
        subject: usize,
        day: usize,
        kind: DayKind,
        start: MinuteIndex,
        end: MinuteIndex,
        midnight: MinuteIndex,
    ) -> Self {
        DayPlan {
            subject,
            day,
            kind,
            start,
            end,
            local_midnight: midnight,
            arousal: Vec::new(),
            exercise: Vec::new(),
            water: Vec::new(),
            loose_wear: Vec::new(),
            walking: Vec::new(),
            sleep: Vec::new(),
            hr_gaps: Vec::new(),
            rr_gaps: Vec::new(),
            eda_gaps: Vec::new(),
            session: Vec::new(),
            notifications: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        (self.end.0 - self.start.0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn span(&self) -> EventSpan {
        EventSpan::new(self.start, self.end).expect("plan spans are ordered")
    }

    pub fn truth(&self, subject_id: &str) -> Vec<TruthRecord> {
        let rec = |span: EventSpan, kind| TruthRecord {
            subject_id: subject_id.to_string(),
            span,
            kind,
        };
        let mut out: Vec<TruthRecord> = Vec::new();
        out.extend(self.arousal.iter().map(|e| rec(e.span, TruthKind::Arousal)));
        out.extend(self.exercise.iter().map(|e| rec(e.span, TruthKind::Exercise)));
        out.extend(self.water.iter().map(|e| rec(e.span, TruthKind::Water)));
        out.extend(self.loose_wear.iter().map(|s| rec(*s, TruthKind::LooseWear)));
        out.extend(self.sleep.iter().map(|s| rec(*s, TruthKind::Sleep)));
        out.sort_by_key(|r| (r.span.start(), r.kind));
        out
    }

    fn local(&self, minute_of_day: i64) -> MinuteIndex {
        self.local_midnight.offset(minute_of_day)
    }
}

/// Injects one arousal event starting at `onset` and returns its truth span.
///
/// The subject template is scaled by `amplitude` and a per-event factor in
/// [0.85, 1.15]; at amplitude zero the rendered streams are unchanged.
pub fn gen_arousal_event(
    plan: &mut DayPlan,
    template: ArousalTemplate,
    amplitude: f64,
    onset: MinuteIndex,
    rng: &mut impl Rng,
) -> Result<EventSpan> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::Config(format!("amplitude must be >= 0, got {amplitude}")));
    }
    let duration = template.duration_min.round() as i64;
    if duration < 1 {
        return Err(Error::Config("arousal event shorter than one minute".into()));
    }
    if onset < plan.start || onset.offset(duration) > plan.end {
        return Err(Error::Config(format!(
            "arousal onset {} (+{duration} min) outside day {}..{}",
            onset.0, plan.start.0, plan.end.0
        )));
    }
    let span = EventSpan::new(onset, onset.offset(duration))?;
    let jitter = rng.random_range(0.85..1.15);
    plan.arousal.push(ArousalEvent {
        span,
        template: template.scaled(amplitude * jitter),
    });
    plan.arousal.sort_by_key(|e| e.span.start());
    Ok(span)
}

fn poisson(rng: &mut impl Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

/// Random non-blocked placement of a `dur`-minute span inside [lo, hi).
fn place(rng: &mut impl Rng, lo: MinuteIndex, hi: MinuteIndex, dur: i64, blocked: &[EventSpan]) -> Option<EventSpan> {
    if hi.0 - lo.0 < dur {
        return None;
    }
    for _ in 0..200 {
        let s = rng.random_range(lo.0..=hi.0 - dur);
        let span = EventSpan::from_minutes(s, s + dur).ok()?;
        if !blocked.iter().any(|b| b.overlaps(&span)) {
            return Some(span);
        }
    }
    None
}

fn around(span: EventSpan, before: i64, after: i64) -> EventSpan {
    EventSpan::new(span.start().offset(-before), span.end().offset(after)).expect("widening keeps order")
}

/// Maximal runs of `true` as spans starting at `origin`.
fn runs(mask: &[bool], origin: MinuteIndex) -> Vec<EventSpan> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let j = i + mask[i..].iter().take_while(|&&v| v).count();
            out.push(EventSpan::new(origin.offset(i as i64), origin.offset(j as i64)).expect("run is ordered"));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Minutes whose trailing five-minute R-R window touches a gap.
fn hrv_blind(gap: &[bool]) -> usize {
    let mut last_gap: Option<usize> = None;
    let mut n = 0;
    for (i, &g) in gap.iter().enumerate() {
        if g {
            last_gap = Some(i);
        }
        if last_gap.is_some_and(|l| i - l <= 4) {
            n += 1;
        }
    }
    n
}

/// Per-group gap layout for a span of `n` minutes. `eda_allowed` marks
/// minutes where an EDA gap may fall; its count is the EDA denominator.
fn plan_gaps(
    rng: &mut impl Rng,
    n: usize,
    rates: (f64, f64, f64),
    eda_allowed: &[bool],
) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    let (hr_rate, hrv_rate, eda_rate) = rates;
    let mut hr = vec![false; n];
    let hr_target = (hr_rate * n as f64).round() as usize;
    let mut count = 0;
    for _ in 0..10_000 {
        if count >= hr_target {
            break;
        }
        let len = rng.random_range(2..=15usize).min(n);
        let s = rng.random_range(0..=n - len);
        hr[s..s + len].fill(true);
        count = hr.iter().filter(|&&v| v).count();
    }

    let mut rr = vec![false; n];
    let hrv_target = (hrv_rate * n as f64).round() as usize;
    let mut either: Vec<bool> = hr.clone();
    for _ in 0..10_000 {
        if hrv_blind(&either) >= hrv_target {
            break;
        }
        let len = rng.random_range(2..=10usize).min(n);
        let s = rng.random_range(0..=n - len);
        rr[s..s + len].fill(true);
        either[s..s + len].fill(true);
    }

    let mut eda = vec![false; n];
    let pool = eda_allowed.iter().filter(|&&v| v).count();
    let eda_target = (eda_rate * pool as f64).round() as usize;
    let mut count = 0;
    for _ in 0..10_000 {
        if count >= eda_target {
            break;
        }
        let len = rng.random_range(2..=10usize).min(n);
        let s = rng.random_range(0..=n - len);
        if eda_allowed[s..s + len].iter().all(|&v| v) {
            eda[s..s + len].fill(true);
            count = eda.iter().filter(|&&v| v).count();
        }
    }
    (hr, rr, eda)
}

fn set_gaps(plan: &mut DayPlan, hr: &[bool], rr: &[bool], eda: &[bool]) {
    plan.hr_gaps = runs(hr, plan.start);
    plan.rr_gaps = runs(rr, plan.start);
    plan.eda_gaps = runs(eda, plan.start);
}

fn uniform_duration(rng: &mut impl Rng, lo: i64, hi: i64) -> i64 {
    rng.random_range(lo..=hi)
}

fn survey(plan: &mut DayPlan, response: SurveyResponse, span: EventSpan) -> Result<()> {
    plan.labels.push(eda_survey_to_label(response, span)?);
    Ok(())
}

/// One free-living day: sleep 23:00 to 07:00, confounder and activity
/// episodes and arousal events while awake, per-group missingness, the
/// notification schedule and the labels it produces.
pub fn plan_free_living_day(cfg: &SynthConfig, profile: &SubjectProfile, day: usize) -> Result<DayPlan> {
    let mut rng = stream_rng(cfg.seed, profile.index, day, Stream::Plan);
    let midnight = cfg.local_midnight(day);
    let mut plan = DayPlan::empty(
        profile.index,
        day,
        DayKind::FreeLiving,
        midnight,
        midnight.offset(1440),
        midnight,
    );
    let wake = plan.local(7 * 60);
    let bed = plan.local(23 * 60);
    plan.sleep = vec![EventSpan::new(plan.start, wake)?, EventSpan::new(bed, plan.end)?];

    // episodes block their surroundings so each one's aftermath stays clean
    let mut blocked: Vec<EventSpan> = Vec::new();
    for _ in 0..poisson(&mut rng, cfg.rates.exercise) {
        let dur = uniform_duration(&mut rng, 20, 60);
        let hr_gain_bpm = rng.random_range(40.0..60.0);
        let sweat_us = rng.random_range(0.2..0.6);
        if let Some(span) = place(&mut rng, wake, bed, dur, &blocked) {
            plan.exercise.push(ExerciseEpisode {
                span,
                hr_gain_bpm,
                sweat_us,
            });
            blocked.push(around(span, 10, 30));
        }
    }
    for _ in 0..poisson(&mut rng, cfg.rates.water) {
        let dur = uniform_duration(&mut rng, 5, 15);
        let eda_rate_us = rng.random_range(0.4..0.8);
        if let Some(span) = place(&mut rng, wake, bed, dur, &blocked) {
            plan.water.push(WaterEpisode { span, eda_rate_us });
            blocked.push(around(span, 10, 25));
        }
    }
    for _ in 0..poisson(&mut rng, cfg.rates.loose_wear) {
        let dur = uniform_duration(&mut rng, 5, 20);
        if let Some(span) = place(&mut rng, wake, bed, dur, &blocked) {
            plan.loose_wear.push(span);
            blocked.push(around(span, 10, 10));
        }
    }
    let confounders = blocked.clone();
    for _ in 0..poisson(&mut rng, cfg.rates.arousal) {
        let dur = uniform_duration(&mut rng, 6, 20);
        if let Some(span) = place(&mut rng, wake, bed, dur, &blocked) {
            let t = profile.template(cfg, dur);
            gen_arousal_event(&mut plan, t, cfg.amplitude, span.start(), &mut rng)?;
            blocked.push(around(span, 10, 30));
        }
    }
    let mut walk_blocked: Vec<EventSpan> = plan.exercise.iter().map(|e| around(e.span, 10, 30)).collect();
    for _ in 0..poisson(&mut rng, cfg.rates.walking) {
        let dur = uniform_duration(&mut rng, 5, 20);
        if let Some(span) = place(&mut rng, wake, bed, dur, &walk_blocked) {
            plan.walking.push(span);
            walk_blocked.push(around(span, 5, 5));
        }
    }
    plan.exercise.sort_by_key(|e| e.span.start());
    plan.water.sort_by_key(|e| e.span.start());
    plan.loose_wear.sort();
    plan.walking.sort();

    let n = plan.len();
    let eda_allowed: Vec<bool> = (0..n)
        .map(|i| {
            let m = plan.start.offset(i as i64);
            m >= wake && m < bed && !confounders.iter().any(|b| b.contains(m))
        })
        .collect();
    let m = &cfg.missing;
    let (hr, rr, eda) = plan_gaps(&mut rng, n, (m.hr, m.hrv, m.eda), &eda_allowed);
    set_gaps(&mut plan, &hr, &rr, &eda);

    // notifications: some arousal events prompt one, plus unrelated triggers
    let mut triggers: Vec<i64> = Vec::new();
    for e in &plan.arousal {
        let prompt = rng.random_bool(cfg.trigger_probability);
        let delay = rng.random_range(5..=15);
        if prompt {
            triggers.push(e.span.start().0 - midnight.0 + delay);
        }
    }
    let s = &cfg.scheduler;
    for _ in 0..poisson(&mut rng, cfg.false_triggers_per_day) {
        triggers.push(rng.random_range(s.window_open..s.window_close));
    }
    let schedule = schedule_day(&triggers, s, &mut rng)?;
    plan.notifications = schedule.iter().map(|n| (plan.local(n.minute), n.kind)).collect();

    let notifications = plan.notifications.clone();
    for (at, _) in notifications {
        let recent = plan
            .arousal
            .iter()
            .map(|e| (e.span.start().0 + e.span.end().0) / 2)
            .filter(|&mid| mid < at.0 && mid >= at.0 - 60)
            .max();
        let lookback = match recent {
            Some(mid) => LookbackChoice::for_minutes_ago(at.0 - mid),
            None => LookbackChoice::ALL[rng.random_range(0..LookbackChoice::ALL.len())],
        };
        let span = EventSpan::new(at.offset(-lookback.duration_minutes()), at)?;
        let hit = plan.arousal.iter().any(|e| e.span.overlaps(&span));
        let u: f64 = rng.random();
        let base: i64 = if hit { 4 } else { 1 };
        let jitter = if u < cfg.likert_jitter {
            -1
        } else if u < 2.0 * cfg.likert_jitter {
            1
        } else {
            0
        };
        let likert = (base + jitter).clamp(1, 5) as u8;
        plan.labels.push(stress_log_to_label(likert, lookback, at)?);
    }

    if profile.eda_responder() {
        let spans: Vec<EventSpan> = plan.arousal.iter().map(|e| e.span).collect();
        for span in spans {
            let response = if rng.random_bool(cfg.survey_stress_probability) {
                SurveyResponse::Stress
            } else {
                SurveyResponse::Unknown
            };
            survey(&mut plan, response, span)?;
        }
    }
    let exercise: Vec<EventSpan> = plan.exercise.iter().map(|e| e.span).collect();
    for span in exercise {
        survey(&mut plan, SurveyResponse::HeatExertion, span)?;
    }
    let water: Vec<EventSpan> = plan.water.iter().map(|e| e.span).collect();
    for span in water {
        survey(&mut plan, SurveyResponse::Humidity, span)?;
    }
    plan.labels.sort_by_key(|l| (l.span().start(), l.span().end()));
    Ok(plan)
}

/// Number of events in a lab session drawn from the configured
/// probabilities for 1 to 4 events.
fn session_event_count(rng: &mut impl Rng, probs: &[f64; 4]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).map_or(1, |i| i + 1)
}

/// One lab session: an hour of baseline, anticipation, stressor, debrief
/// and recovery with one to four arousal events spread across it, rendered
/// with an hour of lead-in and twenty minutes of tail.
pub fn plan_tsst_session(cfg: &SynthConfig, profile: &SubjectProfile, day: usize) -> Result<DayPlan> {
    let mut rng = stream_rng(cfg.seed, profile.index, day, Stream::Plan);
    let midnight = cfg.local_midnight(day);
    let session_start = midnight.offset(10 * 60 + 30 * rng.random_range(0..=8));
    let session_len = TsstPeriod::session_minutes();
    let mut plan = DayPlan::empty(
        profile.index,
        day,
        DayKind::Tsst,
        session_start.offset(-60),
        session_start.offset(session_len + 20),
        midnight,
    );
    let mut at = session_start;
    for (period, len) in TsstPeriod::SEQUENCE {
        plan.session.push((period, EventSpan::new(at, at.offset(len))?));
        at = at.offset(len);
    }

    const SPACING: i64 = 2;
    let k = session_event_count(&mut rng, &cfg.tsst_event_probs);
    let max_dur = (40 / k as i64).min(20);
    let mut durations: Vec<i64> = (0..k).map(|_| rng.random_range(6..=max_dur)).collect();
    durations.shuffle(&mut rng);
    let used: i64 = durations.iter().sum::<i64>() + SPACING * (k as i64 - 1);
    let free = session_len - used;
    let mut cuts: Vec<i64> = (0..k).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut cursor = session_start;
    let mut prev_cut = 0;
    for (i, (&d, &cut)) in durations.iter().zip(&cuts).enumerate() {
        let onset = cursor.offset(cut - prev_cut);
        let t = profile.template(cfg, d);
        let span = gen_arousal_event(&mut plan, t, cfg.amplitude, onset, &mut rng)?;
        cursor = span.end().offset(if i + 1 < k { SPACING } else { 0 });
        prev_cut = cut;
    }

    let session = EventSpan::new(session_start, session_start.offset(session_len))?;
    let mut cursor = session.start();
    for e in &plan.arousal {
        if e.span.start() > cursor {
            plan.labels.push(LabelEvent::new(
                EventSpan::new(cursor, e.span.start())?,
                Polarity::NoStress,
                LabelSource::TsstManual,
                None,
            )?);
        }
        plan.labels.push(LabelEvent::new(
            e.span,
            Polarity::Stress,
            LabelSource::TsstManual,
            None,
        )?);
        cursor = e.span.end();
    }
    if cursor < session.end() {
        plan.labels.push(LabelEvent::new(
            EventSpan::new(cursor, session.end())?,
            Polarity::NoStress,
            LabelSource::TsstManual,
            None,
        )?);
    }

    let n = plan.len();
    let m = &cfg.missing;
    let scale = m.tsst_scale;
    let rates = (m.hr * scale, (m.hrv * scale).max(m.hr * scale), m.eda * scale);
    let (hr, rr, eda) = plan_gaps(&mut rng, n, rates, &vec![true; n]);
    set_gaps(&mut plan, &hr, &rr, &eda);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hrv_blind_extends_four_minutes() {
        let mut gap = vec![false; 20];
        gap[5..8].fill(true);
        assert_eq!(hrv_blind(&gap), 3 + 4);
    }

    #[test]
    fn runs_of_mask() {
        let mask = [false, true, true, false, true];
        let r = runs(&mask, MinuteIndex(100));
        assert_eq!(
            r,
            vec![
                EventSpan::from_minutes(101, 103).unwrap(),
                EventSpan::from_minutes(104, 105).unwrap()
            ]
        );
    }

    #[test]
    fn event_count_sampler_respects_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let k = session_event_count(&mut rng, &[0.4, 0.35, 0.15, 0.10]);
            assert!((1..=4).contains(&k));
        }
        assert_eq!(session_event_count(&mut rng, &[0.0, 1.0, 0.0, 0.0]), 2);
    }

    #[test]
    fn arousal_onset_outside_day_is_config_error() {
        let cfg = SynthConfig::default();
        let profile = SubjectProfile::draw(&cfg, 0);
        let mut plan = plan_tsst_session(&cfg, &profile, 0).unwrap();
        let t = profile.template(&cfg, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let late = plan.end.offset(-5);
        assert!(matches!(
            gen_arousal_event(&mut plan, t, 1.0, late, &mut rng),
            Err(Error::Config(_))
        ));
        let early = plan.start.offset(-1);
        assert!(matches!(
            gen_arousal_event(&mut plan, t, 1.0, early, &mut rng),
            Err(Error::Config(_))
        ));
        let ok = plan.start.offset(3);
        let span = gen_arousal_event(&mut plan, t, 1.0, ok, &mut rng).unwrap();
        assert_eq!(span.duration_minutes(), 10);
    }
}
