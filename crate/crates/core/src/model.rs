//! Shared domain types: the minute timeline, raw signal bundles, the
//! minutely channel table, label events, and construction of labels from
//! stress-log and EDA-survey responses.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer minutes since the Unix epoch (UTC). All streams are aligned on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinuteIndex(pub i64);

impl MinuteIndex {
    pub fn of_seconds(t_s: i64) -> Self {
        MinuteIndex(t_s.div_euclid(60))
    }

    pub fn of_millis(t_ms: i64) -> Self {
        MinuteIndex(t_ms.div_euclid(60_000))
    }

    pub fn start_seconds(self) -> i64 {
        self.0 * 60
    }

    pub fn start_millis(self) -> i64 {
        self.0 * 60_000
    }

    pub fn offset(self, minutes: i64) -> Self {
        MinuteIndex(self.0 + minutes)
    }
}

impl fmt::Display for MinuteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open minute interval `[start, end)`, never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventSpan {
    start: MinuteIndex,
    end: MinuteIndex,
}

impl EventSpan {
    pub fn new(start: MinuteIndex, end: MinuteIndex) -> Result<Self> {
        if end <= start {
            return Err(Error::InvalidLabel(format!("empty span [{start}, {end})")));
        }
        Ok(EventSpan { start, end })
    }

    /// Convenience constructor on raw minute numbers.
    pub fn from_minutes(start: i64, end: i64) -> Result<Self> {
        Self::new(MinuteIndex(start), MinuteIndex(end))
    }

    pub fn start(&self) -> MinuteIndex {
        self.start
    }

    pub fn end(&self) -> MinuteIndex {
        self.end
    }

    pub fn duration_minutes(&self) -> i64 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, m: MinuteIndex) -> bool {
        self.start <= m && m < self.end
    }

    pub fn overlaps(&self, other: &EventSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Span widened by `minutes` on both sides.
    pub fn expanded(&self, minutes: i64) -> EventSpan {
        EventSpan {
            start: self.start.offset(-minutes),
            end: self.end.offset(minutes),
        }
    }

    pub fn shifted(&self, minutes: i64) -> EventSpan {
        EventSpan {
            start: self.start.offset(minutes),
            end: self.end.offset(minutes),
        }
    }

    pub fn minutes(&self) -> impl Iterator<Item = MinuteIndex> {
        (self.start.0..self.end.0).map(MinuteIndex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Stress,
    NoStress,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Stress => "stress",
            Polarity::NoStress => "no_stress",
        }
    }

    pub fn is_stress(self) -> bool {
        self == Polarity::Stress
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stress" => Ok(Polarity::Stress),
            "no_stress" => Ok(Polarity::NoStress),
            other => Err(Error::InvalidLabel(format!("unknown polarity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    TsstManual,
    StressLog,
    EdaSurvey,
    SyntheticTruth,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::TsstManual => "tsst_manual",
            LabelSource::StressLog => "stress_log",
            LabelSource::EdaSurvey => "eda_survey",
            LabelSource::SyntheticTruth => "synthetic_truth",
        }
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsst_manual" => Ok(LabelSource::TsstManual),
            "stress_log" => Ok(LabelSource::StressLog),
            "eda_survey" => Ok(LabelSource::EdaSurvey),
            "synthetic_truth" => Ok(LabelSource::SyntheticTruth),
            other => Err(Error::InvalidLabel(format!("unknown label source {other:?}"))),
        }
    }
}

/// A stress or no-stress label over a minute span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    span: EventSpan,
    polarity: Polarity,
    source: LabelSource,
    likert: Option<u8>,
}

impl LabelEvent {
    /// Builds a label, enforcing that a Likert score is attached exactly to
    /// stress-log labels and agrees with the polarity.
    pub fn new(span: EventSpan, polarity: Polarity, source: LabelSource, likert: Option<u8>) -> Result<Self> {
        match (source, likert) {
            (LabelSource::StressLog, Some(score)) => {
                if polarity_for_likert(score)? != polarity {
                    return Err(Error::InvalidLabel(format!(
                        "likert {score} inconsistent with polarity {}",
                        polarity.as_str()
                    )));
                }
            }
            (LabelSource::StressLog, None) => {
                return Err(Error::InvalidLabel("stress-log label requires a likert score".into()))
            }
            (_, Some(_)) => {
                return Err(Error::InvalidLabel(format!(
                    "likert score only allowed on stress-log labels, got {}",
                    source.as_str()
                )))
            }
            (_, None) => {}
        }
        Ok(LabelEvent {
            span,
            polarity,
            source,
            likert,
        })
    }

    pub fn span(&self) -> EventSpan {
        self.span
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn source(&self) -> LabelSource {
        self.source
    }

    pub fn likert(&self) -> Option<u8> {
        self.likert
    }
}

/// Per-minute truth from label events. Where labels disagree, stress wins.
pub fn minute_labels(labels: &[LabelEvent]) -> BTreeMap<MinuteIndex, bool> {
    let mut out = BTreeMap::new();
    for l in labels {
        let stress = l.polarity().is_stress();
        for m in l.span().minutes() {
            let e = out.entry(m).or_insert(stress);
            *e |= stress;
        }
    }
    out
}

fn polarity_for_likert(likert: u8) -> Result<Polarity> {
    match likert {
        1 | 2 => Ok(Polarity::NoStress),
        3..=5 => Ok(Polarity::Stress),
        other => Err(Error::InvalidLabel(format!("likert score {other} outside 1..=5"))),
    }
}

/// Answer to "how long before the notification did you feel this level of
/// stress".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LookbackChoice {
    #[serde(rename = "0-5")]
    Min0To5,
    #[serde(rename = "5-15")]
    Min5To15,
    #[serde(rename = "15-30")]
    Min15To30,
    #[serde(rename = "30-60")]
    Min30To60,
    #[serde(rename = "60+")]
    Min60Plus,
}

impl LookbackChoice {
    pub const ALL: [LookbackChoice; 5] = [
        LookbackChoice::Min0To5,
        LookbackChoice::Min5To15,
        LookbackChoice::Min15To30,
        LookbackChoice::Min30To60,
        LookbackChoice::Min60Plus,
    ];

    /// Label duration: rounded midpoint of the answer's range, 60 for "60+".
    pub fn duration_minutes(self) -> i64 {
        match self {
            LookbackChoice::Min0To5 => 3,
            LookbackChoice::Min5To15 => 10,
            LookbackChoice::Min15To30 => 23,
            LookbackChoice::Min30To60 => 45,
            LookbackChoice::Min60Plus => 60,
        }
    }

    /// The choice whose range contains `minutes_ago`.
    pub fn for_minutes_ago(minutes_ago: i64) -> Self {
        match minutes_ago {
            i64::MIN..=4 => LookbackChoice::Min0To5,
            5..=14 => LookbackChoice::Min5To15,
            15..=29 => LookbackChoice::Min15To30,
            30..=59 => LookbackChoice::Min30To60,
            _ => LookbackChoice::Min60Plus,
        }
    }
}

/// Converts a stress-log response into a label ending at the notification
/// minute.
pub fn stress_log_to_label(likert: u8, lookback: LookbackChoice, notify_minute: MinuteIndex) -> Result<LabelEvent> {
    let polarity = polarity_for_likert(likert)?;
    let duration = lookback.duration_minutes();
    let span = EventSpan::new(notify_minute.offset(-duration), notify_minute)?;
    LabelEvent::new(span, polarity, LabelSource::StressLog, Some(likert))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyResponse {
    HeatExertion,
    Humidity,
    Stress,
    Unknown,
}

/// Converts a retrospective EDA-event survey answer into a label covering
/// the EDA event itself.
pub fn eda_survey_to_label(response: SurveyResponse, event_span: EventSpan) -> Result<LabelEvent> {
    if event_span.duration_minutes() < 1 {
        return Err(Error::InvalidLabel("empty EDA event span".into()));
    }
    let polarity = match response {
        SurveyResponse::Stress => Polarity::Stress,
        SurveyResponse::HeatExertion | SurveyResponse::Humidity | SurveyResponse::Unknown => Polarity::NoStress,
    };
    LabelEvent::new(event_span, polarity, LabelSource::EdaSurvey, None)
}

/// The four physiological signal groups; a group's channels share validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalGroup {
    Hr,
    Hrv,
    Eda,
    St,
}

impl SignalGroup {
    pub const ALL: [SignalGroup; 4] = [SignalGroup::Hr, SignalGroup::Hrv, SignalGroup::Eda, SignalGroup::St];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalGroup::Hr => "hr",
            SignalGroup::Hrv => "hrv",
            SignalGroup::Eda => "eda",
            SignalGroup::St => "st",
        }
    }

    pub fn channels(self) -> impl Iterator<Item = Channel> {
        Channel::ALL.into_iter().filter(move |c| c.group() == self)
    }
}

/// Per-minute validity of the four signal groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct GroupFlags([bool; 4]);

impl GroupFlags {
    pub fn all() -> Self {
        GroupFlags([true; 4])
    }

    pub fn none() -> Self {
        GroupFlags([false; 4])
    }

    pub fn get(&self, g: SignalGroup) -> bool {
        self.0[g.index()]
    }

    pub fn set(&mut self, g: SignalGroup, v: bool) {
        self.0[g.index()] = v;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn of(groups: &[SignalGroup]) -> Self {
        let mut f = GroupFlags::none();
        for &g in groups {
            f.set(g, true);
        }
        f
    }

    pub fn with(mut self, g: SignalGroup, v: bool) -> Self {
        self.set(g, v);
        self
    }

    pub fn is_subset_of(&self, other: &GroupFlags) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| !a || *b)
    }
}

/// The fourteen minutely input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    RrMean,
    RrMedian,
    RrP20,
    RrP80,
    RrEntropy,
    RrDiffEntropy,
    Sdnn,
    Rmssd,
    Pnn30,
    HrMean,
    EdaSlope,
    EdaMagnitude,
    StSlope,
    StMagnitude,
}

pub const N_CHANNELS: usize = 14;

impl Channel {
    pub const ALL: [Channel; N_CHANNELS] = [
        Channel::RrMean,
        Channel::RrMedian,
        Channel::RrP20,
        Channel::RrP80,
        Channel::RrEntropy,
        Channel::RrDiffEntropy,
        Channel::Sdnn,
        Channel::Rmssd,
        Channel::Pnn30,
        Channel::HrMean,
        Channel::EdaSlope,
        Channel::EdaMagnitude,
        Channel::StSlope,
        Channel::StMagnitude,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> SignalGroup {
        match self {
            Channel::HrMean => SignalGroup::Hr,
            Channel::EdaSlope | Channel::EdaMagnitude => SignalGroup::Eda,
            Channel::StSlope | Channel::StMagnitude => SignalGroup::St,
            _ => SignalGroup::Hrv,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::RrMean => "rr_mean",
            Channel::RrMedian => "rr_median",
            Channel::RrP20 => "rr_p20",
            Channel::RrP80 => "rr_p80",
            Channel::RrEntropy => "rr_entropy",
            Channel::RrDiffEntropy => "rr_diff_entropy",
            Channel::Sdnn => "sdnn",
            Channel::Rmssd => "rmssd",
            Channel::Pnn30 => "pnn30",
            Channel::HrMean => "hr_mean",
            Channel::EdaSlope => "eda_slope",
            Channel::EdaMagnitude => "eda_magnitude",
            Channel::StSlope => "st_slope",
            Channel::StMagnitude => "st_magnitude",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown channel {s:?}")))
    }
}

/// Raw per-subject streams on the shared epoch timeline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignalBundle {
    pub subject_id: String,
    /// (timestamp_s, bpm)
    pub hr_1hz: Vec<(i64, f64)>,
    /// (timestamp_ms of the closing beat, rr_ms)
    pub rr: Vec<(i64, f64)>,
    /// (timestamp_ms, microsiemens)
    pub eda_200hz: Vec<(i64, f64)>,
    /// (timestamp_s, deg_C), 10 s cadence
    pub skin_temp: Vec<(i64, f64)>,
    /// Accelerometer per-minute aggregates, see `confounders::AccelAggregates`.
    pub accel_minutes: Vec<(MinuteIndex, [f64; 6])>,
    /// (timestamp_s, hPa)
    pub pressure: Vec<(i64, f64)>,
}

fn check_increasing<T: PartialOrd + Copy + fmt::Debug>(name: &str, ts: impl Iterator<Item = T>) -> Result<()> {
    let mut prev: Option<T> = None;
    for t in ts {
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::Data(format!(
                    "{name}: timestamps not strictly increasing at {t:?}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

impl SignalBundle {
    pub fn new(subject_id: impl Into<String>) -> Self {
        SignalBundle {
            subject_id: subject_id.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_increasing("hr", self.hr_1hz.iter().map(|s| s.0))?;
        check_increasing("rr", self.rr.iter().map(|s| s.0))?;
        check_increasing("eda", self.eda_200hz.iter().map(|s| s.0))?;
        check_increasing("st", self.skin_temp.iter().map(|s| s.0))?;
        check_increasing("accel", self.accel_minutes.iter().map(|s| s.0))?;
        check_increasing("pressure", self.pressure.iter().map(|s| s.0))?;
        if let Some(&(t, v)) = self.rr.iter().find(|s| !(s.1 > 200.0 && s.1 < 4000.0)) {
            return Err(Error::Data(format!("rr: interval {v} ms at {t} outside (200, 4000)")));
        }
        if let Some(&(t, v)) = self.eda_200hz.iter().find(|s| !(s.1 >= 0.0)) {
            return Err(Error::Data(format!("eda: negative conductance {v} at {t}")));
        }
        if let Some(&(t, v)) = self.skin_temp.iter().find(|s| !(s.1 > 20.0 && s.1 < 45.0)) {
            return Err(Error::Data(format!("st: temperature {v} at {t} outside (20, 45)")));
        }
        Ok(())
    }

    /// First and last minute touched by any stream, if any stream has data.
    pub fn minute_range(&self) -> Option<(MinuteIndex, MinuteIndex)> {
        let mut lo: Option<i64> = None;
        let mut hi: Option<i64> = None;
        let mut see = |m: i64| {
            lo = Some(lo.map_or(m, |l| l.min(m)));
            hi = Some(hi.map_or(m, |h| h.max(m)));
        };
        for s in [self.hr_1hz.first(), self.hr_1hz.last()].into_iter().flatten() {
            see(MinuteIndex::of_seconds(s.0).0);
        }
        for s in [self.rr.first(), self.rr.last()].into_iter().flatten() {
            see(MinuteIndex::of_millis(s.0).0);
        }
        for s in [self.eda_200hz.first(), self.eda_200hz.last()].into_iter().flatten() {
            see(MinuteIndex::of_millis(s.0).0);
        }
        for s in [self.skin_temp.first(), self.skin_temp.last()].into_iter().flatten() {
            see(MinuteIndex::of_seconds(s.0).0);
        }
        for s in [self.accel_minutes.first(), self.accel_minutes.last()]
            .into_iter()
            .flatten()
        {
            see(s.0 .0);
        }
        for s in [self.pressure.first(), self.pressure.last()].into_iter().flatten() {
            see(MinuteIndex::of_seconds(s.0).0);
        }
        Some((MinuteIndex(lo?), MinuteIndex(hi?)))
    }
}

/// One minute of derived channels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MinuteRow {
    pub values: [Option<f64>; N_CHANNELS],
    pub valid: GroupFlags,
}

impl MinuteRow {
    pub fn get(&self, c: Channel) -> Option<f64> {
        self.values[c.index()]
    }

    /// Clears a group's validity and its channel values.
    pub fn invalidate(&mut self, g: SignalGroup) {
        self.valid.set(g, false);
        for c in g.channels() {
            self.values[c.index()] = None;
        }
    }
}

/// Contiguous minutely grid of the fourteen channels with group validity.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteTable {
    start: MinuteIndex,
    rows: Vec<MinuteRow>,
}

impl MinuteTable {
    pub fn new(start: MinuteIndex, rows: Vec<MinuteRow>) -> Result<Self> {
        let table = MinuteTable { start, rows };
        table.check()?;
        Ok(table)
    }

    pub fn empty(start: MinuteIndex, len: usize) -> Self {
        MinuteTable {
            start,
            rows: vec![MinuteRow::default(); len],
        }
    }

    fn check(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for c in Channel::ALL {
                if row.values[c.index()].is_some() && !row.valid.get(c.group()) {
                    return Err(Error::Data(format!(
                        "minute {}: {} present while group {} invalid",
                        self.start.0 + i as i64,
                        c.as_str(),
                        c.group().as_str()
                    )));
                }
                if let Some(v) = row.values[c.index()] {
                    if !v.is_finite() {
                        return Err(Error::Data(format!(
                            "minute {}: non-finite {}",
                            self.start.0 + i as i64,
                            c.as_str()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn start(&self) -> MinuteIndex {
        self.start
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn end(&self) -> MinuteIndex {
        self.start.offset(self.rows.len() as i64)
    }

    pub fn minutes(&self) -> impl Iterator<Item = MinuteIndex> + '_ {
        (0..self.rows.len() as i64).map(move |i| self.start.offset(i))
    }

    pub fn rows(&self) -> &[MinuteRow] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [MinuteRow] {
        &mut self.rows
    }

    pub fn position(&self, m: MinuteIndex) -> Option<usize> {
        let i = m.0 - self.start.0;
        (i >= 0 && (i as usize) < self.rows.len()).then_some(i as usize)
    }

    pub fn row(&self, m: MinuteIndex) -> Option<&MinuteRow> {
        self.position(m).map(|i| &self.rows[i])
    }

    pub fn valid_count(&self, g: SignalGroup) -> usize {
        self.rows.iter().filter(|r| r.valid.get(g)).count()
    }
}

/// Mean and population standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

/// Per-user normalization statistics, one entry per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub stats: Vec<(Channel, ChannelStats)>,
}

impl UserStats {
    /// Statistics over every valid minute of the given tables. Channels with
    /// no valid minute get mean 0 and std 0.
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a MinuteTable>) -> Self {
        let mut sum = [0.0f64; N_CHANNELS];
        let mut count = [0usize; N_CHANNELS];
        let tables: Vec<&MinuteTable> = tables.into_iter().collect();
        for t in &tables {
            for row in t.rows() {
                for c in Channel::ALL {
                    if let Some(v) = row.get(c) {
                        sum[c.index()] += v;
                        count[c.index()] += 1;
                    }
                }
            }
        }
        let mean: Vec<f64> = (0..N_CHANNELS)
            .map(|i| if count[i] > 0 { sum[i] / count[i] as f64 } else { 0.0 })
            .collect();
        let mut ss = [0.0f64; N_CHANNELS];
        for t in &tables {
            for row in t.rows() {
                for c in Channel::ALL {
                    if let Some(v) = row.get(c) {
                        let d = v - mean[c.index()];
                        ss[c.index()] += d * d;
                    }
                }
            }
        }
        let stats = Channel::ALL
            .into_iter()
            .map(|c| {
                let i = c.index();
                let std = if count[i] > 0 {
                    (ss[i] / count[i] as f64).sqrt()
                } else {
                    0.0
                };
                (c, ChannelStats { mean: mean[i], std })
            })
            .collect();
        UserStats { stats }
    }

    pub fn get(&self, c: Channel) -> Option<ChannelStats> {
        self.stats.iter().find(|(ch, _)| *ch == c).map(|(_, s)| *s)
    }

    pub fn validate(&self) -> Result<()> {
        for c in Channel::ALL {
            let s = self
                .get(c)
                .ok_or_else(|| Error::Config(format!("user stats missing channel {}", c.as_str())))?;
            if !(s.std >= 0.0) || !s.mean.is_finite() {
                return Err(Error::Config(format!("bad user stats for {}", c.as_str())));
            }
        }
        if self.stats.len() != N_CHANNELS {
            return Err(Error::Config(format!(
                "user stats must have {N_CHANNELS} entries, got {}",
                self.stats.len()
            )));
        }
        Ok(())
    }
}

/// Everything known about one subject.
#[derive(Debug, Clone)]
pub struct SubjectDataset {
    pub subject_id: String,
    pub bundle: SignalBundle,
    pub labels: Vec<LabelEvent>,
    pub user_stats: UserStats,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stress_log_short_lookback() {
        let l = stress_log_to_label(2, LookbackChoice::Min0To5, MinuteIndex(1000)).unwrap();
        assert_eq!(l.polarity(), Polarity::NoStress);
        assert_eq!(l.span(), EventSpan::from_minutes(997, 1000).unwrap());
        assert_eq!(l.span().duration_minutes(), 3);
        assert_eq!(l.likert(), Some(2));
    }

    #[test]
    fn stress_log_long_lookback() {
        let l = stress_log_to_label(3, LookbackChoice::Min60Plus, MinuteIndex(1000)).unwrap();
        assert_eq!(l.polarity(), Polarity::Stress);
        assert_eq!(l.span(), EventSpan::from_minutes(940, 1000).unwrap());
    }

    #[test]
    fn stress_log_near_origin() {
        let l = stress_log_to_label(1, LookbackChoice::Min0To5, MinuteIndex(5)).unwrap();
        assert_eq!(l.polarity(), Polarity::NoStress);
        assert_eq!(l.span(), EventSpan::from_minutes(2, 5).unwrap());
    }

    #[test]
    fn stress_log_rejects_bad_likert() {
        for bad in [0u8, 6, 200] {
            assert!(matches!(
                stress_log_to_label(bad, LookbackChoice::Min0To5, MinuteIndex(100)),
                Err(Error::InvalidLabel(_))
            ));
        }
    }

    #[test]
    fn likert_polarity_mapping() {
        for l in 1..=5u8 {
            for lb in LookbackChoice::ALL {
                let ev = stress_log_to_label(l, lb, MinuteIndex(500)).unwrap();
                assert_eq!(ev.polarity().is_stress(), l >= 3);
            }
        }
    }

    #[test]
    fn interior_lookback_bins() {
        let d: Vec<i64> = LookbackChoice::ALL.iter().map(|c| c.duration_minutes()).collect();
        assert_eq!(d, vec![3, 10, 23, 45, 60]);
        assert_eq!(LookbackChoice::for_minutes_ago(0), LookbackChoice::Min0To5);
        assert_eq!(LookbackChoice::for_minutes_ago(15), LookbackChoice::Min15To30);
        assert_eq!(LookbackChoice::for_minutes_ago(61), LookbackChoice::Min60Plus);
    }

    #[test]
    fn eda_survey_labels() {
        let span = EventSpan::from_minutes(100, 110).unwrap();
        let s = eda_survey_to_label(SurveyResponse::Stress, span).unwrap();
        assert_eq!(s.polarity(), Polarity::Stress);
        assert_eq!(s.span(), span);
        let h = eda_survey_to_label(SurveyResponse::Humidity, span).unwrap();
        assert_eq!(h.polarity(), Polarity::NoStress);
        assert_eq!(h.span(), span);
        let u = eda_survey_to_label(SurveyResponse::Unknown, EventSpan::from_minutes(5, 6).unwrap()).unwrap();
        assert_eq!(u.polarity(), Polarity::NoStress);
        assert_eq!(u.span().duration_minutes(), 1);
    }

    #[test]
    fn spans_are_non_degenerate() {
        assert!(EventSpan::from_minutes(5, 5).is_err());
        assert!(EventSpan::from_minutes(6, 5).is_err());
    }

    #[test]
    fn likert_only_on_stress_logs() {
        let span = EventSpan::from_minutes(0, 4).unwrap();
        assert!(LabelEvent::new(span, Polarity::Stress, LabelSource::EdaSurvey, Some(4)).is_err());
        assert!(LabelEvent::new(span, Polarity::Stress, LabelSource::StressLog, None).is_err());
        assert!(LabelEvent::new(span, Polarity::NoStress, LabelSource::StressLog, Some(4)).is_err());
    }

    #[test]
    fn table_rejects_value_without_validity() {
        let mut row = MinuteRow::default();
        row.values[Channel::HrMean.index()] = Some(70.0);
        assert!(MinuteTable::new(MinuteIndex(0), vec![row]).is_err());
        row.valid.set(SignalGroup::Hr, true);
        assert!(MinuteTable::new(MinuteIndex(0), vec![row]).is_ok());
    }

    #[test]
    fn channel_groups_partition() {
        let counts: Vec<usize> = SignalGroup::ALL.iter().map(|g| g.channels().count()).collect();
        assert_eq!(counts, vec![1, 9, 2, 2]);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn overlap_symmetric_and_reflexive(a in 0i64..500, la in 1i64..60, b in 0i64..500, lb in 1i64..60) {
                let x = EventSpan::from_minutes(a, a + la).unwrap();
                let y = EventSpan::from_minutes(b, b + lb).unwrap();
                prop_assert_eq!(x.overlaps(&y), y.overlaps(&x));
                prop_assert!(x.overlaps(&x));
                prop_assert_eq!(x.duration_minutes(), la);
            }
        }
    }
}
