use std::fmt::Write as _;

use bodyresp_core::classify::Tier;
use bodyresp_core::evaluate::{Metric, MetricSet, PermutationReport, SubjectDay};
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};

pub const REPORT_CSV: &str = "report.csv";
pub const RIBBON_SVG: &str = "ribbon.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierMetrics {
    pub tier: Tier,
    pub rows: usize,
    pub by_threshold: Vec<ThresholdMetrics>,
}

/// Pooled out-of-fold minute metrics. Tier rows are restricted to windows
/// where all four groups survived so the tiers are compared on equal data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoSection {
    pub rows: usize,
    pub common_rows: usize,
    pub tiers: Vec<TierMetrics>,
    pub cascade: Vec<ThresholdMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSection {
    pub tolerance_min: i64,
    pub days: usize,
    pub predicted_events: usize,
    pub stress_labels: usize,
    pub permutation: PermutationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub mode: Mode,
    pub threshold: f64,
    pub loso: LosoSection,
    /// Unadjusted per-minute metrics of the predictions; absent when no
    /// predicted minute is labeled.
    pub minutes: Option<MetricSet>,
    pub events: EventSection,
    pub config: RunConfig,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `section,tier,threshold,metric,value,null_mean,p_value` rows.
pub fn metric_rows_csv(r: &Report) -> String {
    let mut out = String::from("section,tier,threshold,metric,value,null_mean,p_value\n");
    let mut set = |section: &str, tier: &str, threshold: f64, m: &MetricSet| {
        let _ = writeln!(out, "{section},{tier},{threshold},roc_auc,{},,", cell(m.roc_auc));
        for metric in Metric::ALL {
            let _ = writeln!(
                out,
                "{section},{tier},{threshold},{},{},,",
                metric.as_str(),
                cell(m.get(metric))
            );
        }
    };
    for t in &r.loso.tiers {
        for m in &t.by_threshold {
            set("loso", t.tier.as_str(), m.threshold, &m.metrics);
        }
    }
    for m in &r.loso.cascade {
        set("loso", "cascade", m.threshold, &m.metrics);
    }
    if let Some(m) = &r.minutes {
        set("minutes", "cascade", r.threshold, m);
    }
    for m in &r.events.permutation.metrics {
        let _ = writeln!(
            out,
            "events,cascade,{},{},{},{},{}",
            r.threshold,
            m.metric.as_str(),
            cell(m.actual),
            cell(m.null_mean),
            m.p_value
        );
    }
    out
}

const WIDTH: f64 = 900.0;
const LABEL_W: f64 = 140.0;
const LANE_H: f64 = 10.0;
const ROW_H: f64 = 30.0;

/// One row per subject-day: labels on the upper lane (stress red, calm
/// grey), predicted events on the lower lane.
pub fn ribbon_svg(days: &[SubjectDay]) -> String {
    let height = 30.0 + ROW_H * days.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r##"<text x="4" y="14">labels (red stress, grey calm) vs predicted events (blue)</text>"##
    );
    let plot_w = WIDTH - LABEL_W - 10.0;
    for (i, d) in days.iter().enumerate() {
        let y = 24.0 + ROW_H * i as f64;
        let scale = plot_w / d.len.max(1) as f64;
        let x_of = |m: i64| LABEL_W + (m - d.start.0) as f64 * scale;
        let day_index = d.start.0.div_euclid(1440);
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.1}">{} day {}</text>"#,
            y + LANE_H + 3.0,
            d.subject_id,
            day_index
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LABEL_W}" y="{y:.1}" width="{plot_w:.1}" height="{:.1}" fill="#f4f4f4"/>"##,
            2.0 * LANE_H + 2.0
        );
        for l in &d.labels {
            let color = if l.polarity().is_stress() { "#d62728" } else { "#bbbbbb" };
            let (a, b) = (x_of(l.span().start().0), x_of(l.span().end().0));
            let _ = writeln!(
                s,
                r#"<rect x="{a:.1}" y="{y:.1}" width="{:.1}" height="{LANE_H}" fill="{color}"/>"#,
                b - a
            );
        }
        for e in &d.predictions {
            let (a, b) = (x_of(e.start().0), x_of(e.end().0));
            let _ = writeln!(
                s,
                r##"<rect x="{a:.1}" y="{:.1}" width="{:.1}" height="{LANE_H}" fill="#1f77b4"/>"##,
                y + LANE_H + 2.0,
                b - a
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
