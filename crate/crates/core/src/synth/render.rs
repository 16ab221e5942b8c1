//! Turns a day plan into raw sensor streams.
//!
//! Every stream draws from its own random source, and the number of draws
//! never depends on event amplitudes, so a zero-amplitude event leaves every
//! stream bit-identical.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::plan::{DayPlan, SubjectProfile};
use super::{stream_rng, Stream, SynthConfig};
use crate::model::{EventSpan, MinuteIndex, SignalBundle};

const HR_DRIFT_PHI: f64 = 0.95;
const HR_DRIFT_SD: f64 = 0.3;
const EDA_DRIFT_PHI: f64 = 0.998;
const EDA_DRIFT_SD: f64 = 0.01;
const ST_DRIFT_PHI: f64 = 0.98;
const ST_DRIFT_SD: f64 = 0.03;
const PRESSURE_BASE_HPA: f64 = 1013.25;
const PRESSURE_NOISE_HPA: f64 = 0.05;
const WATER_PRESSURE_NOISE_HPA: f64 = 0.8;
const RR_ARTIFACT_RATE: f64 = 0.003;
const OPEN_CIRCUIT_US: f64 = 0.003;
const EDA_FLOOR_US: f64 = 0.05;
const SLEEP_HR_DROP_BPM: f64 = 5.0;
const WALK_HR_GAIN_BPM: f64 = 7.0;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// AR(1) knots at every minute boundary (n + 1 values).
fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let stationary = sd / (1.0 - phi * phi).sqrt();
    let mut x = stationary * normal(rng);
    let mut out = Vec::with_capacity(n + 1);
    out.push(x);
    for _ in 0..n {
        x = phi * x + sd * normal(rng);
        out.push(x);
    }
    out
}

/// Value of minute-knot series `k` at second `s`.
fn knot_at(k: &[f64], s: usize) -> f64 {
    let m = s / 60;
    let f = (s % 60) as f64 / 60.0;
    k[m] + (k[m + 1] - k[m]) * f
}

fn minute_mask(plan: &DayPlan, spans: impl IntoIterator<Item = EventSpan>) -> Vec<bool> {
    let mut mask = vec![false; plan.len()];
    for s in spans {
        let lo = (s.start().0 - plan.start.0).clamp(0, plan.len() as i64) as usize;
        let hi = (s.end().0 - plan.start.0).clamp(0, plan.len() as i64) as usize;
        mask[lo..hi].fill(true);
    }
    mask
}

/// Additive per-second perturbations from every planned episode.
struct Perturbations {
    hr_bpm: Vec<f64>,
    /// Multiplier on beat-to-beat variability.
    rr_scale: Vec<f64>,
    eda_us: Vec<f64>,
    st_c: Vec<f64>,
}

fn perturbations(plan: &DayPlan) -> Perturbations {
    let secs = plan.len() * 60;
    let mut p = Perturbations {
        hr_bpm: vec![0.0; secs + 1],
        rr_scale: vec![1.0; secs + 1],
        eda_us: vec![0.0; secs + 1],
        st_c: vec![0.0; secs + 1],
    };
    let mut hrv = vec![0.0; secs + 1];
    let offset_s = |m: MinuteIndex| ((m.0 - plan.start.0) * 60) as usize;

    for e in &plan.arousal {
        let t0 = offset_s(e.span.start());
        let support = (e.template.support_min() * 60.0).ceil() as usize;
        for s in t0..(t0 + support).min(secs + 1) {
            let d = e.template.deltas((s - t0) as f64 / 60.0);
            p.hr_bpm[s] += d.hr_bpm;
            hrv[s] += d.hrv_scale;
            p.eda_us[s] += d.eda_us;
            p.st_c[s] += d.st_c;
        }
    }
    let mut exercise_load = vec![0.0; secs + 1];
    for e in &plan.exercise {
        let t0 = offset_s(e.span.start());
        let dur = e.span.duration_minutes() as f64;
        let ramp = |tau: f64| (tau / 2.0).min(1.0);
        let sweat = |tau: f64| 1.0 - (-tau / 8.0).exp();
        for s in t0..(t0 + (dur as usize + 90) * 60).min(secs + 1) {
            let tau = (s - t0) as f64 / 60.0;
            let (load, sw) = if tau < dur {
                (ramp(tau), sweat(tau))
            } else {
                (
                    ramp(dur) * (-(tau - dur) / 3.0).exp(),
                    sweat(dur) * (-(tau - dur) / 15.0).exp(),
                )
            };
            exercise_load[s] = f64::max(exercise_load[s], load);
            p.hr_bpm[s] += e.hr_gain_bpm * load;
            p.eda_us[s] += e.sweat_us * sw;
        }
    }
    for w in &plan.water {
        let t0 = offset_s(w.span.start());
        let dur = w.span.duration_minutes() as f64;
        for s in t0..(t0 + (dur as usize + 120) * 60).min(secs + 1) {
            let tau = (s - t0) as f64 / 60.0;
            p.eda_us[s] += if tau < dur {
                w.eda_rate_us * tau
            } else {
                w.eda_rate_us * dur * (-(tau - dur) / 15.0).exp()
            };
        }
    }
    for span in &plan.walking {
        let t0 = offset_s(span.start());
        let dur = span.duration_minutes() as f64;
        for s in t0..(t0 + (dur as usize + 5) * 60).min(secs + 1) {
            let tau = (s - t0) as f64 / 60.0;
            let level = if tau < dur {
                tau.min(1.0)
            } else {
                (1.0 - (tau - dur)).max(0.0)
            };
            p.hr_bpm[s] += WALK_HR_GAIN_BPM * level;
        }
    }
    for span in &plan.sleep {
        let lo = offset_s(span.start()).min(secs + 1);
        let hi = offset_s(span.end()).min(secs + 1);
        for v in &mut p.hr_bpm[lo..hi] {
            *v -= SLEEP_HR_DROP_BPM;
        }
    }
    for s in 0..=secs {
        p.rr_scale[s] = (1.0 + hrv[s]).max(0.2) * (1.0 - 0.7 * exercise_load[s]);
    }
    p
}

/// Aggregates for one minute of rest, walking or exercise, see
/// `confounders::AccelAggregates` for the order.
fn accel_minute(rng: &mut ChaCha8Rng, state: u8) -> [f64; 6] {
    let u: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
    let base = match state {
        2 => [
            1.3,
            0.5 + 0.3 * u[0],
            140.0 + 35.0 * u[1],
            0.5 + 0.2 * u[2],
            0.5,
            1.5 + u[3],
        ],
        1 => [1.05, 0.2, 80.0, 0.2, 0.45, 0.5],
        _ => [1.0, 0.05, 0.0, 0.05, 0.4, 0.05],
    };
    let mut out = [0.0; 6];
    for k in 0..6 {
        let z = normal(rng);
        out[k] = if k == 2 && state == 0 {
            (2.0 * z).abs()
        } else {
            (base[k] * (1.0 + 0.1 * z)).max(0.0)
        };
        out[k] = round_to(out[k], 1e-4);
    }
    out
}

/// Renders every raw stream for the plan's span.
pub fn render_day(cfg: &SynthConfig, profile: &SubjectProfile, plan: &DayPlan) -> SignalBundle {
    let (subject, day) = (profile.index, plan.day);
    let n = plan.len();
    let secs = n * 60;
    let s0 = plan.start.start_seconds();
    let pert = perturbations(plan);

    let mut latent = stream_rng(cfg.seed, subject, day, Stream::Latent);
    let hr_drift = ar1(&mut latent, n, HR_DRIFT_PHI, HR_DRIFT_SD);
    let eda_drift = ar1(&mut latent, n, EDA_DRIFT_PHI, EDA_DRIFT_SD);
    let st_drift = ar1(&mut latent, n, ST_DRIFT_PHI, ST_DRIFT_SD);
    let p_drift = ar1(&mut latent, n, 0.999, 0.01);

    let hr_clean: Vec<f64> = (0..=secs)
        .map(|s| (profile.hr_base_bpm + knot_at(&hr_drift, s.min(secs - 1)) + pert.hr_bpm[s]).clamp(35.0, 200.0))
        .collect();

    let hr_gap = minute_mask(plan, plan.hr_gaps.iter().copied());
    let rr_gap = minute_mask(plan, plan.rr_gaps.iter().copied());
    let eda_off = minute_mask(plan, plan.eda_gaps.iter().chain(&plan.sleep).copied());
    let loose = minute_mask(plan, plan.loose_wear.iter().copied());
    let water = minute_mask(plan, plan.water.iter().map(|w| w.span));
    let exercise = minute_mask(plan, plan.exercise.iter().map(|e| e.span));
    let walking = minute_mask(plan, plan.walking.iter().copied());

    let mut b = SignalBundle::new(profile.id.clone());
    let t = &cfg.template;

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::Hr);
    b.hr_1hz.reserve(secs);
    for s in 0..secs {
        let z = normal(&mut rng);
        if !hr_gap[s / 60] {
            b.hr_1hz
                .push((s0 + s as i64, round_to(hr_clean[s] + t.hr_noise_bpm * z, 0.01)));
        }
    }

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::Rr);
    let start_ms = s0 * 1000;
    let end_ms = start_ms + secs as i64 * 1000;
    let sigma = profile.rmssd_base_ms / std::f64::consts::SQRT_2;
    let mut t_ms = start_ms + rng.random_range(0..1000);
    loop {
        let s = ((t_ms - start_ms) / 1000) as usize;
        if s >= secs {
            break;
        }
        let z = normal(&mut rng);
        let (u1, u2): (f64, f64) = (rng.random(), rng.random());
        let mut rr = 60_000.0 / hr_clean[s] + sigma * pert.rr_scale[s] * z;
        if u1 < RR_ARTIFACT_RATE {
            rr *= if u2 < 0.5 { 0.55 } else { 1.6 };
        }
        let rr = rr.clamp(250.0, 2000.0).round() as i64;
        t_ms += rr;
        if t_ms >= end_ms {
            break;
        }
        let m = ((t_ms - start_ms) / 60_000) as usize;
        if !hr_gap[m] && !rr_gap[m] {
            b.rr.push((t_ms, rr as f64));
        }
    }

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::Eda);
    let step_ms = 1000 / cfg.eda_rate_hz as i64;
    let per_minute = (60_000 / step_ms) as usize;
    let eda_lat: Vec<f64> = (0..=secs)
        .map(|s| profile.eda_base_us + knot_at(&eda_drift, s.min(secs - 1)) + pert.eda_us[s])
        .collect();
    // open-circuit chunk per loose minute, as (start, end) ms within the minute
    let chunks: Vec<Option<(i64, i64)>> = loose
        .iter()
        .map(|&l| {
            let frac: f64 = rng.random_range(0.55..0.9);
            let len = (frac * 60_000.0) as i64;
            let at = rng.random_range(0..=60_000 - len);
            l.then_some((at, at + len))
        })
        .collect();
    for m in 0..n {
        if eda_off[m] {
            continue;
        }
        for k in 0..per_minute {
            let within = k as i64 * step_ms;
            let rel_ms = m as i64 * 60_000 + within;
            let s = (rel_ms / 1000) as usize;
            let f = (rel_ms % 1000) as f64 / 1000.0;
            let v = eda_lat[s] + (eda_lat[(s + 1).min(secs)] - eda_lat[s]) * f;
            let z = normal(&mut rng);
            let value = match chunks[m] {
                Some((a, e)) if within >= a && within < e => OPEN_CIRCUIT_US + 0.0005 * z.abs(),
                _ => (v.max(EDA_FLOOR_US) + profile.eda_noise_us * z).max(0.0),
            };
            b.eda_200hz.push((start_ms + rel_ms, round_to(value, 1e-4)));
        }
    }

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::St);
    for s in (0..secs).step_by(10) {
        let v = profile.st_base_c + knot_at(&st_drift, s) + pert.st_c[s] + t.st_noise_c * normal(&mut rng);
        b.skin_temp.push((s0 + s as i64, round_to(v, 1e-3)));
    }

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::Pressure);
    for s in (0..secs).step_by(5) {
        let sd = if water[s / 60] {
            WATER_PRESSURE_NOISE_HPA
        } else {
            PRESSURE_NOISE_HPA
        };
        let v = PRESSURE_BASE_HPA + knot_at(&p_drift, s) + sd * normal(&mut rng);
        b.pressure.push((s0 + s as i64, round_to(v, 1e-3)));
    }

    let mut rng = stream_rng(cfg.seed, subject, day, Stream::Accel);
    for m in 0..n {
        let state = if exercise[m] {
            2
        } else if walking[m] {
            1
        } else {
            0
        };
        b.accel_minutes
            .push((plan.start.offset(m as i64), accel_minute(&mut rng, state)));
    }
    b
}
