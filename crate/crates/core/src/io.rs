//! CSV readers and writers for every file the pipeline exchanges.
//!
//! Writers go through [`write_atomic`], so a reader never sees a half-written
//! file. Readers report the offending file and 1-based line number.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::{LosoPrediction, StressPrediction, Tier};
use crate::confounders::{ConfounderMask, MaskFlags, Reason};
use crate::error::{Error, Result};
use crate::featurize::{FeatureDescriptor, FeatureMatrix, FeatureRow};
use crate::model::{
    Channel, EventSpan, GroupFlags, LabelEvent, LabelSource, MinuteIndex, MinuteRow, MinuteTable, Polarity,
    SignalBundle, SignalGroup,
};
use crate::synth::{TruthKind, TruthRecord};

pub const HR_FILE: &str = "hr.csv";
pub const RR_FILE: &str = "rr.csv";
pub const EDA_FILE: &str = "eda.csv";
pub const ST_FILE: &str = "st.csv";
pub const ACCEL_FILE: &str = "accel.csv";
pub const PRESSURE_FILE: &str = "pressure.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const MINUTES_FILE: &str = "minutes.csv";
pub const MASK_FILE: &str = "mask.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const LOSO_FILE: &str = "loso.csv";

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        Ok(CsvOut { w })
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(csv_err)
    }

    fn finish(self, path: &Path) -> Result<()> {
        let bytes = self.w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        write_atomic(path, &bytes)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One data record with its line number for error messages.
pub struct Record<'a> {
    path: &'a Path,
    line: u64,
    rec: &'a csv::StringRecord,
}

impl Record<'_> {
    pub fn line(&self) -> u64 {
        self.line
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, msg)
    }

    pub fn str(&self, i: usize) -> Result<&str> {
        self.rec
            .get(i)
            .ok_or_else(|| self.err(format!("missing column {}", i + 1)))
    }

    pub fn parse<T: FromStr>(&self, i: usize, what: &str) -> Result<T> {
        let s = self.str(i)?.trim();
        s.parse().map_err(|_| self.err(format!("invalid {what} {s:?}")))
    }

    pub fn opt<T: FromStr>(&self, i: usize, what: &str) -> Result<Option<T>> {
        match self.rec.get(i).map(str::trim) {
            None | Some("") => Ok(None),
            Some(_) => self.parse(i, what).map(Some),
        }
    }

    pub fn flag(&self, i: usize, what: &str) -> Result<bool> {
        match self.str(i)?.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(self.err(format!("invalid {what} {s:?}, expected 0 or 1"))),
        }
    }

    pub fn finite(&self, i: usize, what: &str) -> Result<f64> {
        let v: f64 = self.parse(i, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(format!("non-finite {what}")))
        }
    }
}

/// Streams the data records of a CSV file after checking its header.
/// `expected` is matched as a prefix; `exact` also forbids extra columns.
pub fn read_csv(
    path: &Path,
    expected: &[&str],
    exact: bool,
    mut f: impl FnMut(&[String], Record<'_>) -> Result<()>,
) -> Result<()> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let prefix_ok = header.len() >= expected.len() && header.iter().zip(expected).all(|(a, b)| a == b);
    if !prefix_ok || (exact && header.len() != expected.len()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), header.join(",")),
        ));
    }
    let mut rec = csv::StringRecord::new();
    loop {
        let more = r.read_record(&mut rec).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        if !more {
            return Ok(());
        }
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        f(&header, Record { path, line, rec: &rec })?;
    }
}

fn write_pairs<T: ToString + Copy>(path: &Path, header: [&str; 2], rows: &[(T, f64)]) -> Result<()> {
    let mut out = CsvOut::new(&header)?;
    for (t, v) in rows {
        out.row([t.to_string(), v.to_string()])?;
    }
    out.finish(path)
}

fn read_pairs(path: &Path, header: [&str; 2]) -> Result<Vec<(i64, f64)>> {
    let mut v = Vec::new();
    read_csv(path, &header, true, |_, r| {
        v.push((r.parse(0, header[0])?, r.finite(1, header[1])?));
        Ok(())
    })?;
    Ok(v)
}

/// Writes the six stream files of one subject into `dir`.
pub fn write_bundle(dir: &Path, b: &SignalBundle) -> Result<()> {
    write_pairs(&dir.join(HR_FILE), ["timestamp_s", "bpm"], &b.hr_1hz)?;
    write_pairs(&dir.join(RR_FILE), ["timestamp_ms", "rr_ms"], &b.rr)?;
    write_pairs(&dir.join(EDA_FILE), ["timestamp_ms", "microsiemens"], &b.eda_200hz)?;
    write_pairs(&dir.join(ST_FILE), ["timestamp_s", "deg_c"], &b.skin_temp)?;
    let mut out = CsvOut::new(&["epoch_minute", "a1", "a2", "a3", "a4", "a5", "a6"])?;
    for (m, a) in &b.accel_minutes {
        out.row(std::iter::once(m.0.to_string()).chain(a.iter().map(|x| x.to_string())))?;
    }
    out.finish(&dir.join(ACCEL_FILE))?;
    write_pairs(&dir.join(PRESSURE_FILE), ["timestamp_s", "hpa"], &b.pressure)
}

/// Reads the six stream files of one subject from `dir` and validates them.
pub fn read_bundle(dir: &Path, subject_id: &str) -> Result<SignalBundle> {
    let mut b = SignalBundle::new(subject_id);
    b.hr_1hz = read_pairs(&dir.join(HR_FILE), ["timestamp_s", "bpm"])?;
    b.rr = read_pairs(&dir.join(RR_FILE), ["timestamp_ms", "rr_ms"])?;
    b.eda_200hz = read_pairs(&dir.join(EDA_FILE), ["timestamp_ms", "microsiemens"])?;
    b.skin_temp = read_pairs(&dir.join(ST_FILE), ["timestamp_s", "deg_c"])?;
    read_csv(
        &dir.join(ACCEL_FILE),
        &["epoch_minute", "a1", "a2", "a3", "a4", "a5", "a6"],
        true,
        |_, r| {
            let mut a = [0.0; 6];
            for (k, x) in a.iter_mut().enumerate() {
                *x = r.finite(k + 1, "acceleration")?;
            }
            b.accel_minutes.push((MinuteIndex(r.parse(0, "epoch_minute")?), a));
            Ok(())
        },
    )?;
    b.pressure = read_pairs(&dir.join(PRESSURE_FILE), ["timestamp_s", "hpa"])?;
    b.validate()
        .map_err(|e| Error::Data(format!("{}: {e}", dir.display())))?;
    Ok(b)
}

const LABEL_HEADER: [&str; 6] = [
    "subject_id",
    "start_minute",
    "end_minute",
    "polarity",
    "source",
    "likert",
];

pub fn write_labels(path: &Path, labels: &[(String, LabelEvent)]) -> Result<()> {
    let mut out = CsvOut::new(&LABEL_HEADER)?;
    for (s, l) in labels {
        out.row([
            s.clone(),
            l.span().start().0.to_string(),
            l.span().end().0.to_string(),
            l.polarity().as_str().to_string(),
            l.source().as_str().to_string(),
            l.likert().map(|k| k.to_string()).unwrap_or_default(),
        ])?;
    }
    out.finish(path)
}

pub fn read_labels(path: &Path) -> Result<Vec<(String, LabelEvent)>> {
    let mut v = Vec::new();
    read_csv(path, &LABEL_HEADER, true, |_, r| {
        let span = EventSpan::from_minutes(r.parse(1, "start_minute")?, r.parse(2, "end_minute")?)
            .map_err(|e| r.err(e.to_string()))?;
        let polarity: Polarity = r.parse(3, "polarity")?;
        let source: LabelSource = r.parse(4, "source")?;
        let likert: Option<u8> = r.opt(5, "likert")?;
        let label = LabelEvent::new(span, polarity, source, likert).map_err(|e| r.err(e.to_string()))?;
        v.push((r.str(0)?.to_string(), label));
        Ok(())
    })?;
    Ok(v)
}

pub fn write_truth(path: &Path, truth: &[TruthRecord]) -> Result<()> {
    let mut out = CsvOut::new(&["subject", "start", "end", "kind"])?;
    for t in truth {
        out.row([
            t.subject_id.clone(),
            t.span.start().0.to_string(),
            t.span.end().0.to_string(),
            t.kind.as_str().to_string(),
        ])?;
    }
    out.finish(path)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let mut v = Vec::new();
    read_csv(path, &["subject", "start", "end", "kind"], true, |_, r| {
        let span =
            EventSpan::from_minutes(r.parse(1, "start")?, r.parse(2, "end")?).map_err(|e| r.err(e.to_string()))?;
        let kind: TruthKind = r.parse(3, "kind")?;
        v.push(TruthRecord {
            subject_id: r.str(0)?.to_string(),
            span,
            kind,
        });
        Ok(())
    })?;
    Ok(v)
}

fn valid_column(g: SignalGroup) -> String {
    format!("{}_valid", g.as_str())
}

fn minutes_header() -> Vec<String> {
    std::iter::once("epoch_minute".to_string())
        .chain(Channel::ALL.iter().map(|c| c.as_str().to_string()))
        .chain(SignalGroup::ALL.iter().map(|&g| valid_column(g)))
        .collect()
}

pub fn write_minutes(path: &Path, table: &MinuteTable) -> Result<()> {
    let header = minutes_header();
    let mut out = CsvOut::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
    for (m, row) in table.minutes().zip(table.rows()) {
        let fields = std::iter::once(m.0.to_string())
            .chain(row.values.iter().map(|v| fmt_opt(*v)))
            .chain(SignalGroup::ALL.iter().map(|&g| fmt_bool(row.valid.get(g)).to_string()));
        out.row(fields)?;
    }
    out.finish(path)
}

pub fn read_minutes(path: &Path) -> Result<MinuteTable> {
    let header = minutes_header();
    let mut start: Option<MinuteIndex> = None;
    let mut rows = Vec::new();
    read_csv(
        path,
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        true,
        |_, r| {
            let m = MinuteIndex(r.parse(0, "epoch_minute")?);
            let first = *start.get_or_insert(m);
            if m != first.offset(rows.len() as i64) {
                return Err(r.err(format!("minute {} breaks the contiguous grid", m.0)));
            }
            let mut row = MinuteRow::default();
            for (k, c) in Channel::ALL.iter().enumerate() {
                row.values[c.index()] = r.opt::<f64>(k + 1, c.as_str())?;
            }
            for (k, &g) in SignalGroup::ALL.iter().enumerate() {
                row.valid.set(g, r.flag(1 + Channel::ALL.len() + k, &valid_column(g))?);
            }
            rows.push(row);
            Ok(())
        },
    )?;
    MinuteTable::new(start.unwrap_or(MinuteIndex(0)), rows).map_err(|e| Error::parse(path, 0, e.to_string()))
}

const MASK_HEADER: [&str; 4] = ["epoch_minute", "hr_unusable", "eda_unusable", "reasons"];

pub fn write_mask(path: &Path, mask: &ConfounderMask) -> Result<()> {
    let mut out = CsvOut::new(&MASK_HEADER)?;
    for (i, f) in mask.flags().iter().enumerate() {
        let reasons: Vec<&str> = f.reasons.iter().map(|r| r.as_str()).collect();
        out.row([
            mask.start().offset(i as i64).0.to_string(),
            fmt_bool(f.hr_unusable).to_string(),
            fmt_bool(f.eda_unusable).to_string(),
            reasons.join(";"),
        ])?;
    }
    out.finish(path)
}

pub fn read_mask(path: &Path) -> Result<ConfounderMask> {
    let mut start: Option<MinuteIndex> = None;
    let mut flags = Vec::new();
    read_csv(path, &MASK_HEADER, true, |_, r| {
        let m = MinuteIndex(r.parse(0, "epoch_minute")?);
        let first = *start.get_or_insert(m);
        if m != first.offset(flags.len() as i64) {
            return Err(r.err(format!("minute {} breaks the contiguous grid", m.0)));
        }
        let mut f = MaskFlags {
            hr_unusable: r.flag(1, "hr_unusable")?,
            eda_unusable: r.flag(2, "eda_unusable")?,
            ..Default::default()
        };
        for s in r.str(3)?.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            f.reasons
                .insert(Reason::parse(s).ok_or_else(|| r.err(format!("unknown reason {s:?}")))?);
        }
        flags.push(f);
        Ok(())
    })?;
    let start = start.unwrap_or(MinuteIndex(0));
    let mut mask = ConfounderMask::empty(start, flags.len());
    for (i, f) in flags.into_iter().enumerate() {
        mask.set(start.offset(i as i64), f);
    }
    Ok(mask)
}

fn fmt_groups(f: GroupFlags) -> String {
    SignalGroup::ALL
        .iter()
        .filter(|&&g| f.get(g))
        .map(|g| g.as_str())
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_groups(s: &str) -> Option<GroupFlags> {
    let mut f = GroupFlags::none();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        f.set(SignalGroup::ALL.into_iter().find(|g| g.as_str() == part)?, true);
    }
    Some(f)
}

const FEATURE_PREFIX: [&str; 4] = ["subject_id", "anchor_minute", "label", "kept"];

/// `label` is empty for unlabeled rows; `kept` lists the groups that
/// survived the window's coverage check. Dropped descriptors are empty.
pub fn write_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let header: Vec<String> = FEATURE_PREFIX
        .iter()
        .map(|s| s.to_string())
        .chain(fm.descriptors.iter().map(FeatureDescriptor::name))
        .collect();
    let mut out = CsvOut::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
    for r in &fm.rows {
        let fields = [
            r.subject_id.clone(),
            r.anchor.0.to_string(),
            r.label.map(|l| fmt_bool(l).to_string()).unwrap_or_default(),
            fmt_groups(r.kept),
        ]
        .into_iter()
        .chain(r.values.iter().map(|&v| fmt_opt((!v.is_nan()).then_some(v))));
        out.row(fields)?;
    }
    out.finish(path)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut fm = FeatureMatrix::default();
    read_csv(path, &FEATURE_PREFIX, false, |header, r| {
        if fm.descriptors.is_empty() && header.len() > FEATURE_PREFIX.len() {
            fm.descriptors = header[FEATURE_PREFIX.len()..]
                .iter()
                .map(|h| FeatureDescriptor::parse_name(h).map_err(|e| Error::parse(path, 1, e.to_string())))
                .collect::<Result<_>>()?;
        }
        let label = match r.str(2)?.trim() {
            "" => None,
            _ => Some(r.flag(2, "label")?),
        };
        let kept = parse_groups(r.str(3)?).ok_or_else(|| r.err("invalid kept groups"))?;
        let values = (FEATURE_PREFIX.len()..header.len())
            .map(|i| r.opt::<f64>(i, &header[i]).map(|v| v.unwrap_or(f64::NAN)))
            .collect::<Result<_>>()?;
        fm.rows.push(FeatureRow {
            subject_id: r.str(0)?.to_string(),
            anchor: MinuteIndex(r.parse(1, "anchor_minute")?),
            label,
            kept,
            values,
        });
        Ok(())
    })?;
    if fm.descriptors.is_empty() {
        // Header-only file: descriptors still come from the header.
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let header = r.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
        fm.descriptors = header
            .iter()
            .skip(FEATURE_PREFIX.len())
            .map(|h| FeatureDescriptor::parse_name(h).map_err(|e| Error::parse(path, 1, e.to_string())))
            .collect::<Result<_>>()?;
    }
    Ok(fm)
}

const PREDICTION_HEADER: [&str; 5] = ["subject_id", "minute", "probability", "tier", "flag"];

pub fn write_predictions(path: &Path, preds: &[(String, StressPrediction)]) -> Result<()> {
    let mut out = CsvOut::new(&PREDICTION_HEADER)?;
    for (s, p) in preds {
        out.row([
            s.clone(),
            p.minute.0.to_string(),
            fmt_opt(p.probability),
            p.tier.map(|t| t.as_str().to_string()).unwrap_or_default(),
            fmt_bool(p.flag).to_string(),
        ])?;
    }
    out.finish(path)
}

pub fn read_predictions(path: &Path) -> Result<Vec<(String, StressPrediction)>> {
    let mut v = Vec::new();
    read_csv(path, &PREDICTION_HEADER, true, |_, r| {
        let p = StressPrediction {
            minute: MinuteIndex(r.parse(1, "minute")?),
            probability: r.opt(2, "probability")?,
            tier: r.opt::<Tier>(3, "tier")?,
            flag: r.flag(4, "flag")?,
        };
        v.push((r.str(0)?.to_string(), p));
        Ok(())
    })?;
    Ok(v)
}

const EVENT_HEADER: [&str; 3] = ["subject_id", "start_minute", "end_minute"];

pub fn write_events(path: &Path, events: &[(String, EventSpan)]) -> Result<()> {
    let mut out = CsvOut::new(&EVENT_HEADER)?;
    for (s, e) in events {
        out.row([s.clone(), e.start().0.to_string(), e.end().0.to_string()])?;
    }
    out.finish(path)
}

pub fn read_events(path: &Path) -> Result<Vec<(String, EventSpan)>> {
    let mut v = Vec::new();
    read_csv(path, &EVENT_HEADER, true, |_, r| {
        let span = EventSpan::from_minutes(r.parse(1, "start_minute")?, r.parse(2, "end_minute")?)
            .map_err(|e| r.err(e.to_string()))?;
        v.push((r.str(0)?.to_string(), span));
        Ok(())
    })?;
    Ok(v)
}

const LOSO_PREFIX: [&str; 4] = ["subject_id", "minute", "label", "available"];

fn loso_header() -> Vec<String> {
    LOSO_PREFIX
        .iter()
        .map(|s| s.to_string())
        .chain(Tier::ALL.iter().map(|t| format!("p_{}", t.as_str())))
        .collect()
}

/// Out-of-fold probabilities, one column per tier; empty where the tier's
/// groups were unavailable.
pub fn write_loso(path: &Path, preds: &[LosoPrediction]) -> Result<()> {
    let header = loso_header();
    let mut out = CsvOut::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
    for p in preds {
        let fields = [
            p.subject_id.clone(),
            p.minute.0.to_string(),
            fmt_bool(p.label).to_string(),
            fmt_groups(p.available),
        ]
        .into_iter()
        .chain(p.tier_probs.iter().map(|v| fmt_opt(*v)));
        out.row(fields)?;
    }
    out.finish(path)
}

pub fn read_loso(path: &Path) -> Result<Vec<LosoPrediction>> {
    let header = loso_header();
    let mut v = Vec::new();
    read_csv(
        path,
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        true,
        |_, r| {
            let mut tier_probs = [None; 3];
            for (k, p) in tier_probs.iter_mut().enumerate() {
                *p = r.opt(LOSO_PREFIX.len() + k, "probability")?;
            }
            v.push(LosoPrediction {
                subject_id: r.str(0)?.to_string(),
                minute: MinuteIndex(r.parse(1, "minute")?),
                label: r.flag(2, "label")?,
                available: parse_groups(r.str(3)?).ok_or_else(|| r.err("invalid available groups"))?,
                tier_probs,
            });
            Ok(())
        },
    )?;
    Ok(v)
}

/// Per-subject directory under a dataset root.
pub fn subject_dir(root: &Path, subject_id: &str) -> PathBuf {
    root.join(subject_id)
}

/// Subject directories under `root` that hold an `hr.csv`, sorted by name.
pub fn list_subjects(root: &Path) -> Result<Vec<String>> {
    let mut v = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().join(HR_FILE).is_file() {
            if let Some(name) = entry.file_name().to_str() {
                v.push(name.to_string());
            }
        }
    }
    v.sort();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("bodyresp-io-{}-{name}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn labels_round_trip() {
        let d = tmp("labels");
        let labels = vec![
            (
                "S01".to_string(),
                LabelEvent::new(
                    EventSpan::from_minutes(10, 25).unwrap(),
                    Polarity::Stress,
                    LabelSource::TsstManual,
                    None,
                )
                .unwrap(),
            ),
            (
                "S02".to_string(),
                LabelEvent::new(
                    EventSpan::from_minutes(5, 6).unwrap(),
                    Polarity::NoStress,
                    LabelSource::StressLog,
                    Some(1),
                )
                .unwrap(),
            ),
        ];
        let p = d.join(LABELS_FILE);
        write_labels(&p, &labels).unwrap();
        assert_eq!(read_labels(&p).unwrap(), labels);
    }

    #[test]
    fn parse_errors_name_file_and_line() {
        let d = tmp("bad");
        let p = d.join(LABELS_FILE);
        fs::write(&p, "subject_id,start_minute,end_minute,polarity,source,likert\nS01,1,2,stress,tsst_manual,\nS01,x,2,stress,tsst_manual,\n").unwrap();
        match read_labels(&p) {
            Err(Error::Parse { path, line, .. }) => {
                assert_eq!(path, p);
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        fs::write(&p, "subject,start\n").unwrap();
        assert!(matches!(read_labels(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn minutes_and_mask_round_trip() {
        let d = tmp("minutes");
        let mut rows = vec![MinuteRow::default(); 3];
        rows[1].valid.set(SignalGroup::Hr, true);
        rows[1].values[Channel::HrMean.index()] = Some(71.25);
        let table = MinuteTable::new(MinuteIndex(100), rows).unwrap();
        write_minutes(&d.join(MINUTES_FILE), &table).unwrap();
        assert_eq!(read_minutes(&d.join(MINUTES_FILE)).unwrap(), table);

        let mut mask = ConfounderMask::empty(MinuteIndex(100), 3);
        mask.flag(MinuteIndex(101), true, true, Reason::Exercise);
        mask.flag(MinuteIndex(101), false, true, Reason::Water);
        write_mask(&d.join(MASK_FILE), &mask).unwrap();
        assert_eq!(read_mask(&d.join(MASK_FILE)).unwrap(), mask);
    }

    #[test]
    fn events_and_predictions_round_trip() {
        let d = tmp("preds");
        let preds = vec![
            (
                "S01".to_string(),
                StressPrediction {
                    minute: MinuteIndex(7),
                    probability: Some(0.25),
                    tier: Some(Tier::ALL[0]),
                    flag: false,
                },
            ),
            (
                "S01".to_string(),
                StressPrediction {
                    minute: MinuteIndex(8),
                    probability: None,
                    tier: None,
                    flag: false,
                },
            ),
        ];
        write_predictions(&d.join(PREDICTIONS_FILE), &preds).unwrap();
        assert_eq!(read_predictions(&d.join(PREDICTIONS_FILE)).unwrap(), preds);
        let events = vec![("S03".to_string(), EventSpan::from_minutes(1, 9).unwrap())];
        write_events(&d.join(EVENTS_FILE), &events).unwrap();
        assert_eq!(read_events(&d.join(EVENTS_FILE)).unwrap(), events);
    }
}
