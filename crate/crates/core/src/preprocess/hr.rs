use std::collections::BTreeMap;

use crate::model::MinuteIndex;

/// Default limit on bridging gaps in the 1 Hz heart-rate stream.
pub const HR_MAX_GAP_S: i64 = 60;

/// Minutely heart rate: mean of the linearly interpolated secondly series
/// over each non-overlapping minute. Gaps longer than `max_gap_s` are not
/// bridged; minutes without any observed or interpolated second are `None`.
///
/// The output covers every minute from the first to the last sample.
pub fn hr_minutely(samples: &[(i64, f64)], max_gap_s: i64) -> Vec<(MinuteIndex, Option<f64>)> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let m0 = MinuteIndex::of_seconds(first.0).0;
    let m1 = MinuteIndex::of_seconds(last.0).0;
    let n = (m1 - m0 + 1) as usize;
    let mut acc: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    let mut add = |t: i64, v: f64| {
        let i = (MinuteIndex::of_seconds(t).0 - m0) as usize;
        let e = acc.entry(i).or_insert((v, 0.0, 0));
        // accumulate relative to the minute's first value so constant
        // input averages back exactly
        e.1 += v - e.0;
        e.2 += 1;
    };
    for pair in samples.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        let gap = t1 - t0;
        if gap <= max_gap_s {
            for t in t0..t1 {
                let frac = (t - t0) as f64 / gap as f64;
                add(t, v0 + (v1 - v0) * frac);
            }
        } else {
            add(t0, v0);
        }
    }
    add(last.0, last.1);

    (0..n)
        .map(|i| {
            let m = MinuteIndex(m0 + i as i64);
            let v = acc.get(&i).map(|&(base, sum, count)| base + sum / count as f64);
            (m, v)
        })
        .collect()
}
