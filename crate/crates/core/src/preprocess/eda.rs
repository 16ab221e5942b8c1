//! Tonic EDA: 200 Hz -> 25 Hz boxcar, centred five-minute rolling median,
//! zero-phase first-order low-pass, then per-minute slope and magnitude.

use serde::{Deserialize, Serialize};

use crate::model::MinuteIndex;
use crate::stats::{mean_exact, ols};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdaConfig {
    /// Width of each boxcar bin (8 raw samples at 200 Hz).
    pub boxcar_ms: i64,
    pub median_window_s: f64,
    pub lowpass_tau_s: f64,
    /// Fraction of the expected smoothed samples a minute needs to be valid.
    pub min_minute_fraction: f64,
    /// Gaps longer than this split the signal into independently filtered
    /// segments.
    pub segment_gap_ms: i64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig {
            boxcar_ms: 40,
            median_window_s: 300.0,
            lowpass_tau_s: 60.0,
            min_minute_fraction: 0.5,
            segment_gap_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdaMinute {
    /// microsiemens per minute
    pub slope: f64,
    /// microsiemens
    pub magnitude: f64,
}

/// Non-overlapping boxcar mean over fixed time bins. Returns
/// (bin start ms, mean) for every bin holding at least one sample.
pub fn boxcar_downsample(samples: &[(i64, f64)], bin_ms: i64) -> Vec<(i64, f64)> {
    let mut out: Vec<(i64, f64)> = Vec::with_capacity(samples.len() / 8 + 1);
    let mut i = 0;
    while i < samples.len() {
        let bin = samples[i].0.div_euclid(bin_ms);
        let mut j = i;
        while j < samples.len() && samples[j].0.div_euclid(bin_ms) == bin {
            j += 1;
        }
        let vals: Vec<f64> = samples[i..j].iter().map(|s| s.1).collect();
        out.push((bin * bin_ms, mean_exact(&vals)));
        i = j;
    }
    out
}

/// Centred rolling median with `half` samples either side, truncated at the
/// ends. Even-sized windows average the two middle values.
pub fn rolling_median_centered(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut tree = Fenwick::new(n);
    let mut lo = 0usize;
    let mut hi = 0usize; // exclusive
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let want_hi = (i + half + 1).min(n);
        let want_lo = i.saturating_sub(half);
        while hi < want_hi {
            tree.add(rank[hi], 1);
            hi += 1;
        }
        while lo < want_lo {
            tree.add(rank[lo], -1);
            lo += 1;
        }
        let count = hi - lo;
        let med = if count % 2 == 1 {
            x[order[tree.kth(count / 2 + 1)]]
        } else {
            let a = x[order[tree.kth(count / 2)]];
            let b = x[order[tree.kth(count / 2 + 1)]];
            if a == b {
                a
            } else {
                0.5 * (a + b)
            }
        };
        out.push(med);
    }
    out
}

struct Fenwick {
    tree: Vec<i64>,
    log: usize,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        let mut log = 1;
        while (1 << log) <= n {
            log += 1;
        }
        Fenwick {
            tree: vec![0; n + 1],
            log,
        }
    }

    fn add(&mut self, idx: usize, delta: i64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Zero-based index of the k-th (1-based) smallest present element.
    fn kth(&self, mut k: usize) -> usize {
        let mut pos = 0usize;
        for b in (0..self.log).rev() {
            let next = pos + (1 << b);
            if next < self.tree.len() && (self.tree[next] as usize) < k {
                pos = next;
                k -= self.tree[next] as usize;
            }
        }
        pos
    }
}

/// First-order exponential smoother run forward then backward, so a linear
/// trend passes with no lag.
pub fn lowpass_zero_phase(x: &[f64], alpha: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut fwd = Vec::with_capacity(n);
    let mut y = x[0];
    for &v in x {
        y += alpha * (v - y);
        fwd.push(y);
    }
    let mut out = vec![0.0; n];
    let mut z = fwd[n - 1];
    for i in (0..n).rev() {
        z += alpha * (fwd[i] - z);
        out[i] = z;
    }
    out
}

/// Runs the full smoothing chain and returns (timestamp ms, smoothed value)
/// for every downsampled bin.
pub fn eda_smoothed(samples: &[(i64, f64)], cfg: &EdaConfig) -> Vec<(i64, f64)> {
    let ds = boxcar_downsample(samples, cfg.boxcar_ms);
    let dt_s = cfg.boxcar_ms as f64 / 1000.0;
    let half = ((cfg.median_window_s / dt_s) / 2.0).floor() as usize;
    let alpha = 1.0 - (-dt_s / cfg.lowpass_tau_s).exp();
    let mut out = Vec::with_capacity(ds.len());
    let mut start = 0;
    while start < ds.len() {
        let mut end = start + 1;
        while end < ds.len() && ds[end].0 - ds[end - 1].0 <= cfg.segment_gap_ms {
            end += 1;
        }
        let seg: Vec<f64> = ds[start..end].iter().map(|s| s.1).collect();
        let med = rolling_median_centered(&seg, half);
        let lp = lowpass_zero_phase(&med, alpha);
        out.extend(ds[start..end].iter().zip(lp).map(|(s, v)| (s.0, v)));
        start = end;
    }
    out
}

/// Minutely tonic slope and magnitude over the minutes spanned by the raw
/// samples. Minutes with fewer than the required share of smoothed samples
/// are `None`.
pub fn eda_tonic(samples: &[(i64, f64)], cfg: &EdaConfig) -> Vec<(MinuteIndex, Option<EdaMinute>)> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let m0 = MinuteIndex::of_millis(first.0).0;
    let m1 = MinuteIndex::of_millis(last.0).0;
    let smoothed = eda_smoothed(samples, cfg);
    let expected = 60_000.0 / cfg.boxcar_ms as f64;
    let need = (cfg.min_minute_fraction * expected).ceil() as usize;
    let half_bin = cfg.boxcar_ms as f64 / 2.0;

    let mut out = Vec::with_capacity((m1 - m0 + 1) as usize);
    let mut k = 0;
    for m in m0..=m1 {
        let lo = MinuteIndex(m).start_millis();
        let hi = lo + 60_000;
        while k < smoothed.len() && smoothed[k].0 < lo {
            k += 1;
        }
        let mut j = k;
        while j < smoothed.len() && smoothed[j].0 < hi {
            j += 1;
        }
        let slice = &smoothed[k..j];
        let value = if slice.len() >= need && !slice.is_empty() {
            let t: Vec<f64> = slice
                .iter()
                .map(|s| (s.0 - lo) as f64 / 60_000.0 + half_bin / 60_000.0)
                .collect();
            let y: Vec<f64> = slice.iter().map(|s| s.1).collect();
            let (slope, _) = ols(&t, &y);
            Some(EdaMinute {
                slope,
                magnitude: mean_exact(&y),
            })
        } else {
            None
        };
        out.push((MinuteIndex(m), value));
        k = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(start_ms: i64, n: usize, f: impl Fn(f64) -> f64) -> Vec<(i64, f64)> {
        (0..n)
            .map(|i| {
                let t = start_ms + 5 * i as i64;
                (t, f(t as f64 / 60_000.0))
            })
            .collect()
    }

    #[test]
    fn boxcar_sample_count() {
        let s = stream(0, 12_000, |_| 1.0);
        assert_eq!(boxcar_downsample(&s, 40).len(), 1500);
    }

    #[test]
    fn constant_is_fixed_point() {
        for c in [1.0, 0.1, 3.7, 0.0] {
            let s = stream(0, 12_000 * 8, |_| c);
            let out = eda_tonic(&s, &EdaConfig::default());
            assert_eq!(out.len(), 8);
            for (_, v) in out {
                let v = v.unwrap();
                assert_eq!(v.slope, 0.0);
                assert_eq!(v.magnitude, c);
            }
        }
    }

    #[test]
    fn ramp_passes_through_chain() {
        // 1 uS/min ramp over 41 minutes; minute 20 goes from 1.0 to 2.0 when
        // the ramp is offset by -19.
        let s = stream(0, 12_000 * 41, |t| t - 19.0);
        let out = eda_tonic(&s, &EdaConfig::default());
        let (m, v) = out[20];
        assert_eq!(m, MinuteIndex(20));
        let v = v.unwrap();
        assert!((v.slope - 1.0).abs() < 0.05, "slope {}", v.slope);
        assert!((v.magnitude - 1.5).abs() < 0.05, "magnitude {}", v.magnitude);
    }

    #[test]
    fn sparse_minute_invalid() {
        let mut s = stream(0, 12_000, |_| 2.0);
        // minute 1 with only 40% coverage
        s.extend(stream(60_000, 4_800, |_| 2.0));
        let out = eda_tonic(&s, &EdaConfig::default());
        assert!(out[0].1.is_some());
        assert!(out[1].1.is_none());
    }

    #[test]
    fn rolling_median_matches_naive() {
        let x: Vec<f64> = (0..200)
            .map(|i| ((i * 37 % 23) as f64).sin() * 3.0 + (i % 5) as f64)
            .collect();
        for half in [0usize, 1, 2, 5, 17] {
            let got = rolling_median_centered(&x, half);
            for i in 0..x.len() {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(x.len());
                let mut w = x[lo..hi].to_vec();
                w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = w.len();
                let med = if n % 2 == 1 {
                    w[n / 2]
                } else {
                    0.5 * (w[n / 2 - 1] + w[n / 2])
                };
                assert!((got[i] - med).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_removes_isolated_spike() {
        let mut x = vec![1.0; 101];
        x[50] = 100.0;
        let y = rolling_median_centered(&x, 10);
        assert!(y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_phase_lowpass_on_ramp() {
        let x: Vec<f64> = (0..5000).map(|i| i as f64 * 0.01).collect();
        let y = lowpass_zero_phase(&x, 0.05);
        for i in 1000..4000 {
            assert!((y[i] - x[i]).abs() < 1e-6);
        }
    }
}
