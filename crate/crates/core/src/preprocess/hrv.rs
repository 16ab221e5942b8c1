//! R-R interval cleaning over a trailing five-minute window and the nine
//! time-domain HRV metrics computed on the cleaned intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Channel, MinuteIndex};
use crate::stats::{percentile_linear, shannon_entropy_binned};

/// Parameters of the R-R artifact rule and window usability gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RrConfig {
    pub window_minutes: i64,
    /// Number of intervals in the centred rolling median.
    pub median_len: usize,
    /// Maximum relative deviation from the local median.
    pub reject_fraction: f64,
    pub min_valid_fraction: f64,
    pub max_gap_s: f64,
}

impl Default for RrConfig {
    fn default() -> Self {
        RrConfig {
            window_minutes: 5,
            median_len: 11,
            reject_fraction: 0.25,
            min_valid_fraction: 0.20,
            max_gap_s: 10.0,
        }
    }
}

/// Cleaned intervals for the window ending with `minute`.
#[derive(Debug, Clone, PartialEq)]
pub struct RrWindow {
    pub minute: MinuteIndex,
    /// Accepted intervals in time order.
    pub rr_ms: Vec<f64>,
    pub valid_fraction: f64,
    pub max_gap_s: f64,
    pub usable: bool,
}

/// Indices of intervals kept by the rolling-median rule. Each interval is
/// compared against the median of the `median_len` intervals centred on it
/// (truncated at the ends) and dropped if it deviates by more than
/// `reject_fraction` of that median.
pub fn median_filter_keep(rr: &[f64], median_len: usize, reject_fraction: f64) -> Vec<bool> {
    let half = median_len / 2;
    let mut buf = Vec::with_capacity(median_len);
    (0..rr.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(rr.len());
            buf.clear();
            buf.extend_from_slice(&rr[lo..hi]);
            buf.sort_by(f64::total_cmp);
            let n = buf.len();
            let med = if n % 2 == 1 {
                buf[n / 2]
            } else {
                0.5 * (buf[n / 2 - 1] + buf[n / 2])
            };
            (rr[i] - med).abs() <= reject_fraction * med
        })
        .collect()
}

/// Cleans the R-R intervals whose closing beat falls in the trailing window
/// that ends at the close of `minute`.
pub fn rr_clean(rr: &[(i64, f64)], minute: MinuteIndex, cfg: &RrConfig) -> RrWindow {
    let win_end = minute.offset(1).start_millis();
    let win_start = win_end - cfg.window_minutes * 60_000;
    let lo = rr.partition_point(|s| s.0 < win_start);
    let hi = rr.partition_point(|s| s.0 < win_end);
    let slice = &rr[lo..hi];
    let values: Vec<f64> = slice.iter().map(|s| s.1).collect();
    let keep = median_filter_keep(&values, cfg.median_len, cfg.reject_fraction);

    let span_ms = (win_end - win_start) as f64;
    let mut accepted = Vec::with_capacity(values.len());
    let mut covered_until = win_start as f64;
    let mut max_gap_ms = 0.0f64;
    for (s, k) in slice.iter().zip(keep.iter()) {
        if !k {
            continue;
        }
        let (t_end, len) = (s.0 as f64, s.1);
        let t_begin = t_end - len;
        max_gap_ms = max_gap_ms.max(t_begin - covered_until);
        covered_until = covered_until.max(t_end);
        accepted.push(len);
    }
    max_gap_ms = max_gap_ms.max(win_end as f64 - covered_until);

    let valid_fraction = (accepted.iter().sum::<f64>() / span_ms).clamp(0.0, 1.0);
    let max_gap_s = max_gap_ms / 1000.0;
    let usable = accepted.len() >= 2 && valid_fraction >= cfg.min_valid_fraction && max_gap_s <= cfg.max_gap_s;
    RrWindow {
        minute,
        rr_ms: accepted,
        valid_fraction,
        max_gap_s,
        usable,
    }
}

/// Histogram layout for the R-R entropy: 8 ms bins over [200, 2000] ms.
pub const RR_ENTROPY_BINS: (f64, f64, f64) = (200.0, 2000.0, 8.0);
/// Histogram layout for the successive-difference entropy: 8 ms bins over
/// [-500, 500] ms.
pub const RR_DIFF_ENTROPY_BINS: (f64, f64, f64) = (-500.0, 500.0, 8.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvMetrics {
    pub rr_mean_ms: f64,
    pub rr_median_ms: f64,
    pub rr_p20_ms: f64,
    pub rr_p80_ms: f64,
    pub rr_shannon_entropy_nats: f64,
    pub rr_diff_shannon_entropy_nats: f64,
    pub sdnn_ms: f64,
    pub rmssd_ms: f64,
    pub pnn30_fraction: f64,
}

impl HrvMetrics {
    pub fn channel_values(&self) -> [(Channel, f64); 9] {
        [
            (Channel::RrMean, self.rr_mean_ms),
            (Channel::RrMedian, self.rr_median_ms),
            (Channel::RrP20, self.rr_p20_ms),
            (Channel::RrP80, self.rr_p80_ms),
            (Channel::RrEntropy, self.rr_shannon_entropy_nats),
            (Channel::RrDiffEntropy, self.rr_diff_shannon_entropy_nats),
            (Channel::Sdnn, self.sdnn_ms),
            (Channel::Rmssd, self.rmssd_ms),
            (Channel::Pnn30, self.pnn30_fraction),
        ]
    }
}

/// Nine time-domain HRV metrics on a usable window.
pub fn hrv_metrics(w: &RrWindow) -> Result<HrvMetrics> {
    if !w.usable || w.rr_ms.len() < 2 {
        return Err(Error::MissingData(format!(
            "R-R window at minute {} is not usable",
            w.minute
        )));
    }
    let rr = &w.rr_ms;
    let n = rr.len() as f64;
    let base = rr[0];
    let mean = base + rr.iter().map(|x| x - base).sum::<f64>() / n;
    let var = rr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;

    let diffs: Vec<f64> = rr.windows(2).map(|p| p[1] - p[0]).collect();
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let pnn30 = diffs.iter().filter(|d| d.abs() > 30.0).count() as f64 / diffs.len() as f64;

    let mut sorted = rr.clone();
    sorted.sort_by(f64::total_cmp);

    Ok(HrvMetrics {
        rr_mean_ms: mean,
        rr_median_ms: percentile_linear(&sorted, 0.5),
        rr_p20_ms: percentile_linear(&sorted, 0.2),
        rr_p80_ms: percentile_linear(&sorted, 0.8),
        rr_shannon_entropy_nats: shannon_entropy_binned(rr, RR_ENTROPY_BINS),
        rr_diff_shannon_entropy_nats: shannon_entropy_binned(&diffs, RR_DIFF_ENTROPY_BINS),
        sdnn_ms: var.sqrt(),
        rmssd_ms: rmssd,
        pnn30_fraction: pnn30,
    })
}
