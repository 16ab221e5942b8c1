//! Run configuration: TOML file, then `BODYRESP_*` environment overrides,
//! then command-line flags. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bodyresp_core::classify::{LogRegConfig, PostProcess, TrainConfig, EVALUATION_THRESHOLD, PRODUCTION_THRESHOLD};
use bodyresp_core::confounders::ConfounderConfig;
use bodyresp_core::featurize::{SelectionConfig, WindowConfig};
use bodyresp_core::pipeline::StageConfig;
use bodyresp_core::preprocess::PreprocessConfig;
use bodyresp_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "BODYRESP_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Decision threshold 0.50.
    #[default]
    Evaluation,
    /// Decision threshold 0.72.
    Production,
}

impl Mode {
    pub fn threshold(self) -> f64 {
        match self {
            Mode::Evaluation => EVALUATION_THRESHOLD,
            Mode::Production => PRODUCTION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Raw dataset: per-subject stream directories plus labels and truth.
    pub data: PathBuf,
    /// Root for every derived stage directory.
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data: PathBuf::from("data"),
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Empty keeps `logreg.lambda`; otherwise lambda is tuned per tier.
    pub lambda_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub tolerance_min: i64,
    pub permutations: usize,
    /// Keep every null draw in report.json, not just the summaries.
    pub full_draws: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            tolerance_min: 10,
            permutations: 1000,
            full_draws: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub confounders: ConfounderConfig,
    pub window: WindowConfig,
    pub selection: SelectionConfig,
    pub logreg: LogRegConfig,
    pub train: TrainSection,
    pub postprocess: PostProcess,
    pub evaluate: EvaluateSection,
}

impl RunConfig {
    pub fn stage(&self) -> StageConfig {
        StageConfig {
            preprocess: self.preprocess,
            confounders: self.confounders,
        }
    }

    /// Synthesis parameters with the master seed applied.
    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            logreg: self.logreg,
            selection: self.selection,
            window: self.window,
            threshold: self.mode.threshold(),
            lambda_grid: self.train.lambda_grid.clone(),
            seed: self.seed,
        }
    }

    /// Layers the optional file and `env` (name, value) pairs over defaults.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let mut env: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env.sort();
        for (key, value) in env {
            apply_env(&mut table, &key, &value)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.synth().validate().map_err(|e| ConfigError(e.to_string()))?;
        if self.evaluate.permutations == 0 {
            bail!(ConfigError("evaluate.permutations must be positive".into()));
        }
        if self.evaluate.tolerance_min < 0 {
            bail!(ConfigError("evaluate.tolerance_min must be non-negative".into()));
        }
        if self.postprocess.min_duration_min < 1 || self.postprocess.stitch_gap_min < 0 {
            bail!(ConfigError("postprocess durations out of range".into()));
        }
        if self.window.length == 0 || self.window.min_valid > self.window.length {
            bail!(ConfigError("window.min_valid must not exceed window.length".into()));
        }
        Ok(())
    }
}

/// `BODYRESP_EVALUATE__PERMUTATIONS=200` sets `evaluate.permutations`.
/// Values are read as TOML literals, falling back to plain strings.
fn apply_env(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let path: Vec<String> = key[ENV_PREFIX.len()..]
        .split("__")
        .map(str::to_ascii_lowercase)
        .collect();
    if path.iter().any(String::is_empty) {
        bail!(ConfigError(format!("{key}: malformed override name")));
    }
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!(ConfigError(format!("{key}: {p} is not a section"))),
        };
    }
    cur.insert(last.clone(), parsed);
    Ok(())
}

/// Configuration or schema problem; exits with status 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}
