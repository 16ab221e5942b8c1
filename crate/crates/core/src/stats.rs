//! Small numeric helpers shared across modules.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Quantile of an ascending-sorted slice, linear interpolation between the
/// closest ranks (inclusive). Position is `q * (n - 1)`.
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Shannon entropy (nats) of a fixed-bin histogram. Values outside the range
/// are counted in the edge bins; empty bins contribute nothing.
pub fn shannon_entropy_binned(values: &[f64], (lo, hi, width): (f64, f64, f64)) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let nbins = ((hi - lo) / width).round() as usize;
    let mut counts = vec![0usize; nbins];
    for &v in values {
        let b = ((v - lo) / width).floor();
        let b = if b < 0.0 { 0 } else { (b as usize).min(nbins - 1) };
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    // a single occupied bin gives -1*ln(1) = -0.0
    h.max(0.0)
}

/// Mean computed relative to the first element, so constant input is
/// reproduced exactly.
pub fn mean_exact(x: &[f64]) -> f64 {
    let base = x[0];
    base + x.iter().map(|v| v - base).sum::<f64>() / x.len() as f64
}

/// Ordinary least squares fit of `y` on `t`; returns (slope, intercept).
pub fn ols(t: &[f64], y: &[f64]) -> (f64, f64) {
    let tm = mean_exact(t);
    let ym = mean_exact(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in t.iter().zip(y.iter()) {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, ym - slope * tm)
}

/// Mean and population variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, v)
}

/// Two-sided Welch t-test p-value. Degenerate inputs (fewer than two
/// observations in a group, or zero pooled standard error with equal means)
/// give 1.0; zero standard error with different means gives 0.0.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return 1.0;
    }
    let sample = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (m, v, n)
    };
    let (ma, va, na) = sample(a);
    let (mb, vb, nb) = sample(b);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    let diff = ma - mb;
    if !(se2 > 0.0) {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = match StudentsT::new(0.0, 1.0, df) {
        Ok(d) => d,
        Err(_) => return 1.0,
    };
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]).then(i.cmp(&j)));
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        // ratio first: a factor >= 1 can never round the product below p
        let v = (p[i] * (m as f64 / (rank + 1) as f64)).min(1.0);
        running = running.min(v);
        adj[i] = running;
    }
    adj
}

/// Which hypotheses the BH procedure rejects at level `alpha`.
pub fn bh_reject(p: &[f64], alpha: f64) -> Vec<bool> {
    bh_adjust(p).into_iter().map(|a| a <= alpha).collect()
}

/// Logistic function, numerically stable in both tails.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the stream identified by `parts` under `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bh_all_rejected_on_small_uniform_grid() {
        let p = [0.01, 0.02, 0.03, 0.04];
        // brute force: reject all ranks <= largest k with p(k) <= k/m * alpha
        let m = p.len();
        let kmax = (1..=m)
            .filter(|&k| p[k - 1] <= k as f64 / m as f64 * 0.05)
            .max()
            .unwrap();
        assert_eq!(kmax, 4);
        assert_eq!(bh_reject(&p, 0.05), vec![true; 4]);
        for a in bh_adjust(&p) {
            assert!((a - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn bh_step_up_matches_brute_force() {
        let p = [0.2, 0.001, 0.04, 0.03, 0.5, 0.012];
        let m = p.len();
        let mut sorted = p.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let kmax = (1..=m)
            .filter(|&k| sorted[k - 1] <= k as f64 / m as f64 * 0.05)
            .max()
            .unwrap_or(0);
        let cutoff = if kmax == 0 { -1.0 } else { sorted[kmax - 1] };
        let expected: Vec<bool> = p.iter().map(|&x| x <= cutoff).collect();
        assert_eq!(bh_reject(&p, 0.05), expected);
    }

    #[test]
    fn welch_known_value() {
        // scipy.stats.ttest_ind(a, b, equal_var=False) -> p = 0.0642799977...
        let a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
        let b = [28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7];
        let p = welch_p_value(&a, &b);
        assert!((p - 0.064_279_997_7).abs() < 1e-9, "p = {p}");
    }

    #[test]
    fn welch_degenerate() {
        assert_eq!(welch_p_value(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_eq!(welch_p_value(&[1.0, 1.0], &[2.0, 2.0]), 0.0);
        assert_eq!(welch_p_value(&[1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn sigmoid_and_softplus_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn entropy_two_equal_bins() {
        let h = shannon_entropy_binned(&[800.0, 900.0], (200.0, 2000.0, 8.0));
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
