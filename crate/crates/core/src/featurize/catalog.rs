//! Aggregation functions applied to each 31-minute window column.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Channel, SignalGroup};
use crate::stats::percentile_linear;

/// One of the 28 windowed inputs: a raw channel or its per-user z-score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureChannel {
    pub channel: Channel,
    pub z: bool,
}

pub const N_FEATURE_CHANNELS: usize = 28;

impl FeatureChannel {
    pub fn raw(channel: Channel) -> Self {
        FeatureChannel { channel, z: false }
    }

    pub fn zscored(channel: Channel) -> Self {
        FeatureChannel { channel, z: true }
    }

    /// Raw channels first, then their z-scored copies.
    pub fn all() -> impl Iterator<Item = FeatureChannel> {
        Channel::ALL
            .into_iter()
            .map(FeatureChannel::raw)
            .chain(Channel::ALL.into_iter().map(FeatureChannel::zscored))
    }

    pub fn index(self) -> usize {
        self.channel.index() + if self.z { Channel::ALL.len() } else { 0 }
    }

    pub fn group(self) -> SignalGroup {
        self.channel.group()
    }
}

impl fmt::Display for FeatureChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.z {
            write!(f, "z_{}", self.channel.as_str())
        } else {
            f.write_str(self.channel.as_str())
        }
    }
}

impl FromStr for FeatureChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("z_") {
            Some(rest) => Ok(FeatureChannel::zscored(rest.parse()?)),
            None => Ok(FeatureChannel::raw(s.parse()?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendAttr {
    Slope,
    Intercept,
}

/// Crossing level for `number_cross_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossLevel {
    Value(f64),
    /// Median of the window being aggregated.
    WindowMedian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureFn {
    AggLinearTrend { chunk_len: usize, attr: TrendAttr },
    ChangeQuantiles { ql: f64, qh: f64, isabs: bool },
    EnergyRatioByChunks { segments: usize, focus: usize },
    IndexMassQuantile { q: f64 },
    LastLocationOfMinimum,
    LinearTrend { attr: TrendAttr },
    MeanChange,
    Median,
    NumberCrossM { m: CrossLevel },
    NumberPeaks { n: usize },
    Quantile { q: f64 },
    SumValues,
}

impl FeatureFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            FeatureFn::AggLinearTrend { chunk_len, attr } => agg_linear_trend(x, chunk_len, attr),
            FeatureFn::ChangeQuantiles { ql, qh, isabs } => change_quantiles(x, ql, qh, isabs),
            FeatureFn::EnergyRatioByChunks { segments, focus } => energy_ratio_by_chunks(x, segments, focus),
            FeatureFn::IndexMassQuantile { q } => index_mass_quantile(x, q),
            FeatureFn::LastLocationOfMinimum => last_location_of_minimum(x),
            FeatureFn::LinearTrend { attr } => {
                let (s, i) = linear_trend(x);
                match attr {
                    TrendAttr::Slope => s,
                    TrendAttr::Intercept => i,
                }
            }
            FeatureFn::MeanChange => mean_change(x),
            FeatureFn::Median => median(x),
            FeatureFn::NumberCrossM { m } => {
                let level = match m {
                    CrossLevel::Value(v) => v,
                    CrossLevel::WindowMedian => median(x),
                };
                number_cross_m(x, level) as f64
            }
            FeatureFn::NumberPeaks { n } => number_peaks(x, n) as f64,
            FeatureFn::Quantile { q } => quantile(x, q),
            FeatureFn::SumValues => x.iter().sum(),
        }
    }
}

/// Serializable identity of one feature: `channel|function|params|attr`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub channel: String,
    pub function: String,
    pub params: String,
    pub attr: String,
}

impl FeatureDescriptor {
    pub fn new(channel: FeatureChannel, function: &str, params: &str, attr: &str) -> Self {
        FeatureDescriptor {
            channel: channel.to_string(),
            function: function.to_string(),
            params: params.to_string(),
            attr: attr.to_string(),
        }
    }

    pub fn name(&self) -> String {
        format!("{}|{}|{}|{}", self.channel, self.function, self.params, self.attr)
    }

    pub fn parse_name(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!("malformed feature name {s:?}")));
        }
        let d = FeatureDescriptor {
            channel: parts[0].into(),
            function: parts[1].into(),
            params: parts[2].into(),
            attr: parts[3].into(),
        };
        d.resolve()?;
        Ok(d)
    }

    pub fn feature_channel(&self) -> Result<FeatureChannel> {
        self.channel.parse()
    }

    /// Resolves the descriptor to an input channel and an evaluable function.
    pub fn resolve(&self) -> Result<(FeatureChannel, FeatureFn)> {
        let ch = self.feature_channel()?;
        let p = Params::parse(&self.params)?;
        let trend = |attr: &str| match attr {
            "slope" => Ok(TrendAttr::Slope),
            "intercept" => Ok(TrendAttr::Intercept),
            _ => Err(Error::Config(format!("unknown trend attribute {attr:?}"))),
        };
        let f = match self.function.as_str() {
            "agg_linear_trend" => {
                if p.get("f_agg")? != "mean" {
                    return Err(Error::Config("agg_linear_trend supports f_agg=mean only".into()));
                }
                FeatureFn::AggLinearTrend {
                    chunk_len: p.usize("chunk_len")?,
                    attr: trend(&self.attr)?,
                }
            }
            "change_quantiles" => {
                if p.get("f_agg")? != "mean" {
                    return Err(Error::Config("change_quantiles supports f_agg=mean only".into()));
                }
                FeatureFn::ChangeQuantiles {
                    ql: p.f64("ql")?,
                    qh: p.f64("qh")?,
                    isabs: p.bool("isabs")?,
                }
            }
            "energy_ratio_by_chunks" => FeatureFn::EnergyRatioByChunks {
                segments: p.usize("num_segments")?,
                focus: p.usize("segment_focus")?,
            },
            "index_mass_quantile" => FeatureFn::IndexMassQuantile { q: p.f64("q")? },
            "last_location_of_minimum" => FeatureFn::LastLocationOfMinimum,
            "linear_trend" => FeatureFn::LinearTrend {
                attr: trend(&self.attr)?,
            },
            "mean_change" => FeatureFn::MeanChange,
            "median" => FeatureFn::Median,
            "number_cross_m" => FeatureFn::NumberCrossM {
                m: match p.get("m")? {
                    "median" => CrossLevel::WindowMedian,
                    v => CrossLevel::Value(
                        v.parse()
                            .map_err(|_| Error::Config(format!("bad crossing level {v:?}")))?,
                    ),
                },
            },
            "number_peaks" => FeatureFn::NumberPeaks { n: p.usize("n")? },
            "quantile" => FeatureFn::Quantile { q: p.f64("q")? },
            "sum_values" => FeatureFn::SumValues,
            other => return Err(Error::Config(format!("unknown aggregation function {other:?}"))),
        };
        Ok((ch, f))
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

struct Params<'a>(Vec<(&'a str, &'a str)>);

impl<'a> Params<'a> {
    fn parse(s: &'a str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Params(Vec::new()));
        }
        s.split(';')
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| Error::Config(format!("malformed parameter {kv:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Params)
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.0
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("missing parameter {key}")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(Error::Config(format!("bad value {v:?} for {key}"))),
        }
    }
}

/// The shipped grid: 20 descriptors for each of the 28 feature channels.
pub fn default_catalog() -> Vec<FeatureDescriptor> {
    let mut out = Vec::new();
    for ch in FeatureChannel::all() {
        let d = |f: &str, p: &str, a: &str| FeatureDescriptor::new(ch, f, p, a);
        out.push(d("agg_linear_trend", "chunk_len=5;f_agg=mean", "slope"));
        out.push(d("agg_linear_trend", "chunk_len=5;f_agg=mean", "intercept"));
        for isabs in ["true", "false"] {
            out.push(d(
                "change_quantiles",
                &format!("ql=0.2;qh=0.8;isabs={isabs};f_agg=mean"),
                "value",
            ));
        }
        for focus in 0..5 {
            out.push(d(
                "energy_ratio_by_chunks",
                &format!("num_segments=5;segment_focus={focus}"),
                "value",
            ));
        }
        out.push(d("index_mass_quantile", "q=0.5", "value"));
        out.push(d("last_location_of_minimum", "", "value"));
        out.push(d("linear_trend", "", "slope"));
        out.push(d("linear_trend", "", "intercept"));
        out.push(d("mean_change", "", "value"));
        out.push(d("median", "", "value"));
        out.push(d("number_cross_m", if ch.z { "m=0" } else { "m=median" }, "value"));
        out.push(d("number_peaks", "n=3", "value"));
        out.push(d("quantile", "q=0.2", "value"));
        out.push(d("quantile", "q=0.8", "value"));
        out.push(d("sum_values", "", "value"));
    }
    out
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn quantile(x: &[f64], q: f64) -> f64 {
    percentile_linear(&sorted(x), q)
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Least-squares line of `x` against its index; returns (slope, intercept).
pub fn linear_trend(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let ym = x.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let d = i as f64 - tm;
        sxy += d * (v - ym);
        sxx += d * d;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, ym - slope * tm)
}

/// Linear trend over chunk means; the last chunk may be shorter.
pub fn agg_linear_trend(x: &[f64], chunk_len: usize, attr: TrendAttr) -> f64 {
    let means: Vec<f64> = x
        .chunks(chunk_len)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let (s, i) = linear_trend(&means);
    match attr {
        TrendAttr::Slope => s,
        TrendAttr::Intercept => i,
    }
}

/// Mean of consecutive changes whose endpoints both lie inside the
/// [ql, qh] quantile corridor; 0 when no change qualifies.
pub fn change_quantiles(x: &[f64], ql: f64, qh: f64, isabs: bool) -> f64 {
    let s = sorted(x);
    let lo = percentile_linear(&s, ql);
    let hi = percentile_linear(&s, qh);
    let inside = |v: f64| v >= lo && v <= hi;
    let mut sum = 0.0;
    let mut n = 0usize;
    for w in x.windows(2) {
        if inside(w[0]) && inside(w[1]) {
            let d = w[1] - w[0];
            sum += if isabs { d.abs() } else { d };
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Share of total energy in segment `focus` when `x` is split into
/// `segments` near-equal parts (the first `len % segments` parts get one
/// extra element). Zero total energy gives 0.
pub fn energy_ratio_by_chunks(x: &[f64], segments: usize, focus: usize) -> f64 {
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let base = x.len() / segments;
    let extra = x.len() % segments;
    let start = focus * base + focus.min(extra);
    let len = base + usize::from(focus < extra);
    x[start..start + len].iter().map(|v| v * v).sum::<f64>() / total
}

/// Relative position (1-based index / length) where the cumulative absolute
/// mass first reaches `q`. An all-zero series gives 0.5.
pub fn index_mass_quantile(x: &[f64], q: f64) -> f64 {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.5;
    }
    let mut acc = 0.0;
    for (i, v) in x.iter().enumerate() {
        acc += v.abs();
        if acc / total >= q {
            return (i + 1) as f64 / x.len() as f64;
        }
    }
    1.0
}

/// (1 + last index of the minimum) / length.
pub fn last_location_of_minimum(x: &[f64]) -> f64 {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v <= x[best] {
            best = i;
        }
    }
    (best + 1) as f64 / x.len() as f64
}

pub fn mean_change(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64
}

/// Number of times the series moves between `> m` and `<= m`.
pub fn number_cross_m(x: &[f64], m: f64) -> usize {
    x.windows(2).filter(|w| (w[0] > m) != (w[1] > m)).count()
}

/// Number of points strictly greater than their `n` neighbours on each side.
pub fn number_peaks(x: &[f64], n: usize) -> usize {
    if x.len() < 2 * n + 1 {
        return 0;
    }
    (n..x.len() - n)
        .filter(|&i| (1..=n).all(|k| x[i] > x[i - k] && x[i] > x[i + k]))
        .count()
}
