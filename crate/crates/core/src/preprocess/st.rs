use crate::model::MinuteIndex;
use crate::stats::{mean_exact, ols};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StMinute {
    /// degrees C per minute
    pub slope: f64,
    pub magnitude: f64,
}

/// Per-minute skin-temperature slope (least squares against time) and mean.
/// Minutes with fewer than two samples are `None`.
pub fn st_minutely(samples: &[(i64, f64)]) -> Vec<(MinuteIndex, Option<StMinute>)> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let m0 = MinuteIndex::of_seconds(first.0).0;
    let m1 = MinuteIndex::of_seconds(last.0).0;
    let mut out = Vec::with_capacity((m1 - m0 + 1) as usize);
    let mut k = 0;
    for m in m0..=m1 {
        let lo = MinuteIndex(m).start_seconds();
        let mut j = k;
        while j < samples.len() && samples[j].0 < lo + 60 {
            j += 1;
        }
        let slice = &samples[k..j];
        let value = (slice.len() >= 2).then(|| {
            let t: Vec<f64> = slice.iter().map(|s| (s.0 - lo) as f64 / 60.0).collect();
            let y: Vec<f64> = slice.iter().map(|s| s.1).collect();
            StMinute {
                slope: ols(&t, &y).0,
                magnitude: mean_exact(&y),
            }
        });
        out.push((MinuteIndex(m), value));
        k = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_minute() {
        let s: Vec<(i64, f64)> = (0..6).map(|i| (i * 10, 33.0)).collect();
        let out = st_minutely(&s);
        let v = out[0].1.unwrap();
        assert_eq!(v.slope, 0.0);
        assert_eq!(v.magnitude, 33.0);
    }

    #[test]
    fn six_point_ramp() {
        let s: Vec<(i64, f64)> = (0..6).map(|i| (i * 10, 33.0 + 0.1 * i as f64)).collect();
        // closed form: slope = sum((t-tm)(y-ym)) / sum((t-tm)^2) with t in minutes
        let t: Vec<f64> = (0..6).map(|i| i as f64 / 6.0).collect();
        let y: Vec<f64> = (0..6).map(|i| 33.0 + 0.1 * i as f64).collect();
        let tm = t.iter().sum::<f64>() / 6.0;
        let ym = y.iter().sum::<f64>() / 6.0;
        let num: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
        let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
        assert!((num / den - 0.6).abs() < 1e-9);
        let v = st_minutely(&s)[0].1.unwrap();
        assert!((v.slope - 0.6).abs() < 1e-9);
        assert!((v.magnitude - 33.25).abs() < 1e-9);
    }

    #[test]
    fn single_sample_is_invalid() {
        let out = st_minutely(&[(5, 33.0)]);
        assert_eq!(out, vec![(MinuteIndex(0), None)]);
    }
}
