//! Shape of a synthetic arousal response over time since onset.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplateConfig {
    /// Minutes for HR to reach its peak after onset.
    pub rise_min: f64,
    /// Share of the HR peak sustained for the rest of the event.
    pub hr_sustain: f64,
    /// Decay constant from the peak to the sustained level (minutes).
    pub hr_settle_min: f64,
    /// Recovery time constant after the event ends (minutes).
    pub hr_decay_min: f64,
    pub eda_rise_min: f64,
    pub eda_decay_min: f64,
    /// Per-subject HR response range at amplitude 1 (bpm).
    pub hr_amp_bpm: (f64, f64),
    /// Per-subject EDA response range at amplitude 1 (uS).
    pub eda_amp_us: (f64, f64),
    /// Fractional drop of beat-to-beat variability at amplitude 1.
    pub hrv_dip: f64,
    pub st_drop_c: f64,
    pub hr_noise_bpm: f64,
    pub eda_noise_us: f64,
    pub st_noise_c: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig {
            rise_min: 3.0,
            hr_sustain: 0.6,
            hr_settle_min: 3.0,
            hr_decay_min: 4.0,
            eda_rise_min: 4.0,
            eda_decay_min: 10.0,
            hr_amp_bpm: (8.0, 16.0),
            eda_amp_us: (0.4, 1.2),
            hrv_dip: 0.35,
            st_drop_c: 0.15,
            hr_noise_bpm: 1.0,
            eda_noise_us: 0.01,
            st_noise_c: 0.02,
        }
    }
}

/// A subject's response to one event: per-channel amplitudes plus the
/// shared time course.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArousalTemplate {
    pub duration_min: f64,
    pub hr_amp_bpm: f64,
    pub eda_amp_us: f64,
    /// Fraction in [0, 1) by which RMSSD and SDNN shrink at full response.
    pub hrv_dip: f64,
    pub st_drop_c: f64,
    pub shape: TemplateConfig,
}

/// Additive offsets at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Deltas {
    pub hr_bpm: f64,
    /// Multiplier on beat-to-beat variability is `1 + hrv_scale`.
    pub hrv_scale: f64,
    pub eda_us: f64,
    pub st_c: f64,
}

impl ArousalTemplate {
    /// Unit HR course: linear rise to the peak, settling toward the
    /// sustained level while the event lasts, then exponential recovery.
    pub fn hr_shape(&self, tau: f64) -> f64 {
        let s = &self.shape;
        let during = |t: f64| {
            if t < s.rise_min {
                t / s.rise_min
            } else {
                s.hr_sustain + (1.0 - s.hr_sustain) * (-(t - s.rise_min) / s.hr_settle_min).exp()
            }
        };
        if tau < 0.0 {
            0.0
        } else if tau < self.duration_min {
            during(tau)
        } else {
            during(self.duration_min) * (-(tau - self.duration_min) / s.hr_decay_min).exp()
        }
    }

    pub fn eda_shape(&self, tau: f64) -> f64 {
        let s = &self.shape;
        let during = |t: f64| 1.0 - (-t / s.eda_rise_min).exp();
        if tau < 0.0 {
            0.0
        } else if tau < self.duration_min {
            during(tau)
        } else {
            during(self.duration_min) * (-(tau - self.duration_min) / s.eda_decay_min).exp()
        }
    }

    /// Unit variability dip: same rise as HR but held for the whole event,
    /// recovering with the HR time constant afterwards.
    pub fn hrv_shape(&self, tau: f64) -> f64 {
        let s = &self.shape;
        let during = |t: f64| (t / s.rise_min).min(1.0);
        if tau < 0.0 {
            0.0
        } else if tau < self.duration_min {
            during(tau)
        } else {
            during(self.duration_min) * (-(tau - self.duration_min) / s.hr_decay_min).exp()
        }
    }

    pub fn hr_delta_bpm(&self, tau: f64) -> f64 {
        self.hr_amp_bpm * self.hr_shape(tau)
    }

    pub fn rmssd_delta_ms(&self, tau: f64, rmssd_base_ms: f64) -> f64 {
        -self.hrv_dip * rmssd_base_ms * self.hrv_shape(tau)
    }

    pub fn sdnn_delta_ms(&self, tau: f64, sdnn_base_ms: f64) -> f64 {
        -self.hrv_dip * sdnn_base_ms * self.hrv_shape(tau)
    }

    pub fn eda_delta_us(&self, tau: f64) -> f64 {
        self.eda_amp_us * self.eda_shape(tau)
    }

    pub fn st_delta_c(&self, tau: f64) -> f64 {
        -self.st_drop_c * self.hr_shape(tau)
    }

    pub fn deltas(&self, tau: f64) -> Deltas {
        Deltas {
            hr_bpm: self.hr_delta_bpm(tau),
            hrv_scale: -self.hrv_dip * self.hrv_shape(tau),
            eda_us: self.eda_delta_us(tau),
            st_c: self.st_delta_c(tau),
        }
    }

    /// Minutes after onset beyond which every curve is negligible.
    pub fn support_min(&self) -> f64 {
        self.duration_min + 8.0 * self.shape.hr_decay_min.max(self.shape.eda_decay_min)
    }

    /// The same response with every amplitude multiplied by `k`.
    pub fn scaled(mut self, k: f64) -> Self {
        self.hr_amp_bpm *= k;
        self.eda_amp_us *= k;
        self.hrv_dip = (self.hrv_dip * k).min(0.8);
        self.st_drop_c *= k;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> ArousalTemplate {
        ArousalTemplate {
            duration_min: 10.0,
            hr_amp_bpm: 12.0,
            eda_amp_us: 0.8,
            hrv_dip: 0.35,
            st_drop_c: 0.15,
            shape: TemplateConfig::default(),
        }
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let t = template().scaled(0.0);
        for i in -10..200 {
            let d = t.deltas(i as f64 * 0.25);
            assert_eq!(
                d,
                Deltas {
                    hr_bpm: 0.0,
                    hrv_scale: -0.0,
                    eda_us: 0.0,
                    st_c: -0.0
                }
            );
        }
    }

    #[test]
    fn signs_over_support() {
        let t = template();
        for i in 0..400 {
            let tau = i as f64 * 0.1;
            assert!(t.hr_delta_bpm(tau) >= 0.0);
            assert!(t.eda_delta_us(tau) >= 0.0);
            assert!(t.rmssd_delta_ms(tau, 40.0) <= 0.0);
            assert!(t.sdnn_delta_ms(tau, 50.0) <= 0.0);
        }
    }

    #[test]
    fn hr_peaks_at_rise_end() {
        let t = template();
        let peak = (0..200)
            .map(|i| i as f64 * 0.1)
            .max_by(|a, b| t.hr_shape(*a).total_cmp(&t.hr_shape(*b)))
            .unwrap();
        assert!((peak - 3.0).abs() < 0.11);
    }
}
