//! JSON analysis configuration.
//!
//! ```json
//! {
//!   "mode": "lead",
//!   "dataset": "../data/lead_counts.csv",
//!   "seed": 20240101,
//!   "grid": { "t_min": -2, "t_max": 4, "step": 0.05, "t0": 0 },
//!   "outputs": { "csv": "lead.csv", "svg": "lead.svg" },
//!   "lead": { "n_total": 400000, "m": 5, "mechanism": "accordion" }
//! }
//! ```
//!
//! `mode` may be omitted when exactly one of the `election` / `lead` blocks is
//! present. Relative dataset paths are resolved against the config file's
//! directory by [`load_config`].

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::decision::ThresholdRule;
use crate::imputation::{ImputationConfig, LeadPopulation, MnarMechanism};
use crate::regression::IntervalKind;
use crate::sweep::{KnobDistribution, KnobGrid, PlausibleRegion};

pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_LEVELS: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Field {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Election,
    Lead,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Election => "election",
            Mode::Lead => "lead",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    dataset: PathBuf,
    seed: Option<u64>,
    grid: Option<RawGrid>,
    outputs: Option<RawOutputs>,
    election: Option<RawElection>,
    lead: Option<RawLead>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_min: Option<f64>,
    t_max: Option<f64>,
    step: Option<f64>,
    t0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElection {
    x0: f64,
    level: Option<f64>,
    interval_kind: Option<IntervalKind>,
    plausible_region: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMechanism {
    Named(String),
    Weights(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKnobDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLead {
    n_total: u64,
    m: Option<usize>,
    threshold: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    mechanism: Option<RawMechanism>,
    levels: Option<usize>,
    cutoff: Option<usize>,
    snapshot_ts: Option<Vec<f64>>,
    knob_distribution: Option<RawKnobDistribution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionSettings {
    pub x0: f64,
    pub level: f64,
    pub interval_kind: IntervalKind,
    pub plausible_region: Option<PlausibleRegion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadSettings {
    pub n_total: u64,
    pub imputation: ImputationConfig,
    pub rule: ThresholdRule,
    pub a: f64,
    pub b: f64,
    pub mechanism: MnarMechanism,
    pub levels: usize,
    pub cutoff: usize,
    /// Knob values for the frequency insets; empty means pick defaults from the grid.
    pub snapshot_ts: Vec<f64>,
    pub knob_distribution: Option<KnobDistribution>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    Election(ElectionSettings),
    Lead(LeadSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub dataset_path: PathBuf,
    pub grid: KnobGrid,
    pub seed: u64,
    pub outputs: OutputPaths,
    pub study: Study,
}

impl AnalysisConfig {
    pub fn mode(&self) -> Mode {
        match self.study {
            Study::Election(_) => Mode::Election,
            Study::Lead(_) => Mode::Lead,
        }
    }

    /// Replaces the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Study::Lead(lead) = &mut self.study {
            lead.imputation.seed = seed;
        }
    }

    pub fn set_grid_step(&mut self, step: f64) -> Result<(), ConfigError> {
        self.grid = self
            .grid
            .with_step(step)
            .map_err(|e| ConfigError::field("grid.step", e))?;
        Ok(())
    }
}

/// Parses and validates a JSON document, filling defaults.
pub fn parse_config(document: &str) -> Result<AnalysisConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        ConfigError::field(path, e.into_inner())
    })?;

    let mode = match (raw.mode, raw.election.is_some(), raw.lead.is_some()) {
        (Some(m), _, _) => m,
        (None, true, false) => Mode::Election,
        (None, false, true) => Mode::Lead,
        _ => {
            return Err(ConfigError::field(
                "mode",
                "missing; required unless exactly one of `election` or `lead` is present",
            ))
        }
    };
    if raw.dataset.as_os_str().is_empty() {
        return Err(ConfigError::field("dataset", "path is empty"));
    }

    let seed = raw.seed.unwrap_or(DEFAULT_SEED);
    let g = raw.grid.unwrap_or_default();
    let (def_min, def_max, def_step) = match mode {
        Mode::Election => (-4.0, 4.0, KnobGrid::ELECTION_STEP),
        Mode::Lead => (-2.0, 4.0, KnobGrid::LEAD_STEP),
    };
    let grid = KnobGrid::new(
        g.t_min.unwrap_or(def_min),
        g.t_max.unwrap_or(def_max),
        g.step.unwrap_or(def_step),
        g.t0.unwrap_or(0.0),
    )
    .map_err(|e| ConfigError::field("grid", e))?;

    let o = raw.outputs.unwrap_or_default();
    let outputs = OutputPaths {
        csv: o.csv.unwrap_or_else(|| PathBuf::from(format!("cid_{}.csv", mode.as_str()))),
        svg: o.svg.unwrap_or_else(|| PathBuf::from(format!("cid_{}.svg", mode.as_str()))),
    };
    if outputs.csv.as_os_str().is_empty() {
        return Err(ConfigError::field("outputs.csv", "path is empty"));
    }
    if outputs.svg.as_os_str().is_empty() {
        return Err(ConfigError::field("outputs.svg", "path is empty"));
    }

    let study = match mode {
        Mode::Election => {
            let e = raw.election.ok_or_else(|| ConfigError::field("election", "missing block"))?;
            Study::Election(election_settings(e)?)
        }
        Mode::Lead => {
            let l = raw.lead.ok_or_else(|| ConfigError::field("lead", "missing block"))?;
            Study::Lead(lead_settings(l, seed)?)
        }
    };

    Ok(AnalysisConfig {
        dataset_path: raw.dataset,
        grid,
        seed,
        outputs,
        study,
    })
}

fn election_settings(e: RawElection) -> Result<ElectionSettings, ConfigError> {
    if !e.x0.is_finite() {
        return Err(ConfigError::field("election.x0", "must be finite"));
    }
    let level = e.level.unwrap_or(DEFAULT_LEVEL);
    if !(level > 0.0 && level < 1.0) {
        return Err(ConfigError::field("election.level", format!("must lie in (0, 1), got {level}")));
    }
    let plausible_region = e
        .plausible_region
        .map(|[lo, hi]| PlausibleRegion::new(lo, hi, "configured"))
        .transpose()
        .map_err(|err| ConfigError::field("election.plausible_region", err))?;
    Ok(ElectionSettings {
        x0: e.x0,
        level,
        interval_kind: e.interval_kind.unwrap_or(IntervalKind::MeanResponse),
        plausible_region,
    })
}

fn lead_settings(l: RawLead, seed: u64) -> Result<LeadSettings, ConfigError> {
    let levels = l.levels.unwrap_or(DEFAULT_LEVELS);
    if levels < 2 {
        return Err(ConfigError::field("lead.levels", "need at least 2 levels"));
    }
    let cutoff = l.cutoff.unwrap_or(LeadPopulation::DEFAULT_CUTOFF);
    if cutoff == 0 || cutoff >= levels {
        return Err(ConfigError::field("lead.cutoff", format!("must lie in 1..{levels}")));
    }
    if l.n_total == 0 {
        return Err(ConfigError::field("lead.n_total", "must be positive"));
    }
    let m = l.m.unwrap_or(ImputationConfig::DEFAULT_M);
    let imputation = ImputationConfig::new(m, seed).map_err(|e| ConfigError::field("lead.m", e))?;
    let rule = ThresholdRule::new(l.threshold.unwrap_or(ThresholdRule::DEFAULT_THRESHOLD))
        .map_err(|e| ConfigError::field("lead.threshold", e))?;
    let a = l.a.unwrap_or(1.0);
    let b = l.b.unwrap_or(1.0);
    if !(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0) {
        return Err(ConfigError::field("lead", "costs a and b must be nonnegative and not both zero"));
    }
    let mechanism = match l.mechanism.unwrap_or(RawMechanism::Named("accordion".into())) {
        RawMechanism::Named(name) => MnarMechanism::builtin(&name)
            .map(|m| if m.is_mar() { MnarMechanism::mar(levels) } else { m })
            .ok_or_else(|| {
                ConfigError::field(
                    "lead.mechanism",
                    format!(
                        "unknown mechanism `{name}` (expected one of: {})",
                        MnarMechanism::builtin_names().join(", ")
                    ),
                )
            })?,
        RawMechanism::Weights(w) => {
            MnarMechanism::new("custom", w).map_err(|e| ConfigError::field("lead.mechanism", e))?
        }
    };
    if mechanism.weights.len() != levels {
        return Err(ConfigError::field(
            "lead.mechanism",
            format!(
                "weight vector has length {} but there are {levels} levels",
                mechanism.weights.len()
            ),
        ));
    }
    let knob_distribution = l
        .knob_distribution
        .map(|d| KnobDistribution::new(d.support, d.weights))
        .transpose()
        .map_err(|e| ConfigError::field("lead.knob_distribution", e))?;
    Ok(LeadSettings {
        n_total: l.n_total,
        imputation,
        rule,
        a,
        b,
        mechanism,
        levels,
        cutoff,
        snapshot_ts: l.snapshot_ts.unwrap_or_default(),
        knob_distribution,
    })
}

/// Reads a config file and resolves a relative dataset path against its directory.
pub fn load_config(path: &Path) -> Result<AnalysisConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if cfg.dataset_path.is_relative() {
        if let Some(dir) = path.parent() {
            cfg.dataset_path = dir.join(&cfg.dataset_path);
        }
    }
    Ok(cfg)
}
