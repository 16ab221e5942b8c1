//! Stress-log notification timing for one free-living day.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    /// Local minute of day the notification window opens.
    pub window_open: i64,
    /// Local minute of day the window closes (exclusive).
    pub window_close: i64,
    pub min_gap: i64,
    /// Quiet time after which a notification is forced.
    pub quiet_limit: i64,
    pub forced_jitter: i64,
    pub min_count: usize,
    pub max_count: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            window_open: 8 * 60,
            window_close: 22 * 60,
            min_gap: 45,
            quiet_limit: 165,
            forced_jitter: 20,
            min_count: 5,
            max_count: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    Triggered,
    Forced,
    TopUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    /// Local minute of day.
    pub minute: i64,
    pub kind: NotificationKind,
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        let span = self.window_close - self.window_open;
        let needed = self.min_gap * (self.min_count.saturating_sub(1)) as i64;
        if self.min_count == 0 || self.min_count > self.max_count {
            return Err(Error::Config(format!(
                "notification counts {}..={} are inconsistent",
                self.min_count, self.max_count
            )));
        }
        if span <= needed {
            return Err(Error::Config(format!(
                "notification window of {span} min cannot hold {} notifications {} min apart",
                self.min_count, self.min_gap
            )));
        }
        if self.quiet_limit < self.min_gap {
            return Err(Error::Config("quiet limit shorter than the minimum gap".into()));
        }
        Ok(())
    }
}

/// Schedules one day's notifications from candidate trigger times (local
/// minutes, any order).
///
/// Triggers are honoured when at least `min_gap` after the previous
/// notification. When `quiet_limit` passes without one (counting from the
/// window opening), a notification is forced within `forced_jitter` minutes.
/// Days left short of `min_count` are topped up inside the largest gaps.
pub fn schedule_day(triggers: &[i64], cfg: &SchedulerConfig, rng: &mut impl Rng) -> Result<Vec<Notification>> {
    cfg.validate()?;
    let mut trig: Vec<i64> = triggers
        .iter()
        .copied()
        .filter(|&t| t >= cfg.window_open && t < cfg.window_close)
        .collect();
    trig.sort_unstable();

    let mut out: Vec<Notification> = Vec::new();
    let mut reference = cfg.window_open;
    while out.len() < cfg.max_count {
        let earliest = out.last().map_or(cfg.window_open, |n| n.minute + cfg.min_gap);
        let deadline = reference + cfg.quiet_limit;
        let next_trigger = trig.iter().copied().find(|&t| t >= earliest);
        let (minute, kind) = match next_trigger {
            Some(t) if t <= deadline => (t, NotificationKind::Triggered),
            _ => (
                deadline + rng.random_range(0..=cfg.forced_jitter),
                NotificationKind::Forced,
            ),
        };
        if minute >= cfg.window_close {
            break;
        }
        out.push(Notification { minute, kind });
        reference = minute;
    }

    while out.len() < cfg.min_count {
        let mut bounds = vec![cfg.window_open - cfg.min_gap];
        bounds.extend(out.iter().map(|n| n.minute));
        bounds.push(cfg.window_close + cfg.min_gap - 1);
        let (lo, hi) = bounds
            .windows(2)
            .map(|w| (w[0], w[1]))
            .max_by_key(|&(a, b)| (b - a, std::cmp::Reverse(a)))
            .expect("at least two bounds");
        let first = (lo + cfg.min_gap).max(cfg.window_open);
        let last = (hi - cfg.min_gap).min(cfg.window_close - 1);
        if first > last {
            return Err(Error::Config(format!(
                "cannot fit {} notifications into the window",
                cfg.min_count
            )));
        }
        let minute = rng.random_range(first..=last);
        let pos = out.partition_point(|n| n.minute < minute);
        out.insert(
            pos,
            Notification {
                minute,
                kind: NotificationKind::TopUp,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check(day: &[Notification], cfg: &SchedulerConfig) {
        assert!((cfg.min_count..=cfg.max_count).contains(&day.len()), "{day:?}");
        for w in day.windows(2) {
            assert!(w[1].minute - w[0].minute >= cfg.min_gap, "{day:?}");
        }
        for n in day {
            assert!(n.minute >= cfg.window_open && n.minute < cfg.window_close);
        }
    }

    #[test]
    fn no_triggers_still_fills_day() {
        let cfg = SchedulerConfig::default();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let day = schedule_day(&[], &cfg, &mut rng).unwrap();
            check(&day, &cfg);
            let first = day[0].minute - cfg.window_open;
            assert!((165..=185).contains(&first) || day[0].kind == NotificationKind::TopUp);
        }
    }

    #[test]
    fn dense_triggers_capped() {
        let cfg = SchedulerConfig::default();
        let trig: Vec<i64> = (480..1320).step_by(10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let day = schedule_day(&trig, &cfg, &mut rng).unwrap();
        assert_eq!(day.len(), 7);
        check(&day, &cfg);
    }

    #[test]
    fn short_window_is_config_error() {
        let cfg = SchedulerConfig {
            window_open: 600,
            window_close: 770,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(schedule_day(&[], &cfg, &mut rng), Err(Error::Config(_))));
    }
}
