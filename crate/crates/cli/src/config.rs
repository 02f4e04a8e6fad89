//! Experiment configuration: one TOML file layered over the defaults, then
//! `KEY=VALUE` overrides. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use rfsep_core::metrics::MetricConfig;
use rfsep_core::mixing::DatasetSpec;
use rfsep_separators::evaluation::Method;
use rfsep_separators::task::{carson_band, default_dataset_spec, sub_seed};
use rfsep_separators::{ModelConfig, ToyTaskConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Every section seed is derived from this one.
    pub seed: u64,
    /// Run directory; not part of the config hash.
    pub out_dir: PathBuf,
    pub task: ToyTaskConfig,
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
    pub metrics: MetricConfig,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("run"),
            task: ToyTaskConfig::default(),
            dataset: DatasetSpec { sinr_range_db: [-10.0, 20.0], count: 1500, ..default_dataset_spec() },
            model: ModelConfig::default(),
            train: TrainConfig { epochs: 8, ..TrainConfig::default() },
            evaluate: EvaluateConfig::default(),
            metrics: MetricConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub sinr_grid_db: Vec<f64>,
    /// Held-out clips per grid point.
    pub clips: usize,
    pub clip_s: f64,
    pub methods: Vec<Method>,
    /// Model inference runs on independent chunks of this many samples.
    pub chunk: usize,
    pub batch: usize,
    pub lmmse_window: usize,
    /// Diagonal loading relative to the mean diagonal.
    pub lmmse_loading: f64,
    /// Pool slices used for each covariance estimate.
    pub lmmse_slices: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            sinr_grid_db: vec![-10.0, 0.0, 10.0],
            clips: 4,
            clip_s: 1.0,
            methods: vec![Method::Passthrough, Method::MatchedFilter, Method::Lmmse, Method::Model],
            chunk: 10240,
            batch: 4,
            lmmse_window: 128,
            lmmse_loading: 1e-3,
            lmmse_slices: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub batch_size: usize,
    pub batch_sizes: Vec<usize>,
    pub signal_length: usize,
    pub duration_s: f64,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    pub queue_capacity: usize,
    pub trials: usize,
    pub warmup: usize,
    /// Benchmark a sleeping stub with this per-window time instead of the model.
    pub stub_tau_s: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            batch_size: 1,
            batch_sizes: vec![1, 2, 4, 8, 16],
            signal_length: 10240,
            duration_s: 10.0,
            time_scale: 1.0,
            queue_capacity: 8,
            trials: 10,
            warmup: 3,
            stub_tau_s: None,
        }
    }
}

// TOML integers are i64, so derived seeds stay within 63 bits
fn derived(seed: u64, tag: u64) -> u64 {
    sub_seed(seed, tag) >> 1
}

const TAG_TASK: u64 = 11;
const TAG_DATASET: u64 = 12;
const TAG_TRAIN: u64 = 13;
const TAG_INIT: u64 = 14;

impl ExperimentConfig {
    /// Defaults, then `file`, then `overrides` (dotted key paths).
    pub fn load(file: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let mut table = match toml::Value::try_from(Self::default()) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("defaults serialize to a table"),
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
            let user: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut table, user);
        }
        for (key, value) in overrides {
            set_path(&mut table, key, value.clone())?;
        }
        let mut unknown = Vec::new();
        let cfg: Self = serde_ignored::deserialize(toml::Value::Table(table), |p| unknown.push(p.to_string()))
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let cfg = cfg.with_derived_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    fn with_derived_seeds(mut self) -> Self {
        self.task.seed = derived(self.seed, TAG_TASK);
        self.dataset.seed = derived(self.seed, TAG_DATASET);
        self.train.seed = derived(self.seed, TAG_TRAIN);
        self
    }

    pub fn init_seed(&self) -> u64 {
        derived(self.seed, TAG_INIT)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |section: &str, e: &dyn std::fmt::Display| CliError::Config(format!("[{section}] {e}"));
        if self.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        self.task.validate().map_err(|e| cfg("task", &e))?;
        self.dataset.validate().map_err(|e| cfg("dataset", &e))?;
        self.model.validate().map_err(|e| cfg("model", &e))?;
        self.train.validate().map_err(|e| cfg("train", &e))?;
        let q = self.model.length_quantum();
        if self.dataset.slice_length % q != 0 {
            return Err(cfg("dataset", &format!("slice_length {} must be a multiple of the model window {q}", self.dataset.slice_length)));
        }
        let ev = &self.evaluate;
        if ev.sinr_grid_db.is_empty() || ev.sinr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(cfg("evaluate", &"sinr_grid_db must be a nonempty list of finite values"));
        }
        if ev.methods.is_empty() || ev.clips == 0 || !(ev.clip_s > 0.0) || ev.batch == 0 {
            return Err(cfg("evaluate", &"methods, clips, clip_s and batch must be nonempty or positive"));
        }
        if ev.chunk == 0 || ev.chunk % q != 0 {
            return Err(cfg("evaluate", &format!("chunk {} must be a positive multiple of the model window {q}", ev.chunk)));
        }
        if ev.lmmse_window == 0 || ev.lmmse_slices == 0 || !(ev.lmmse_loading >= 0.0) {
            return Err(cfg("evaluate", &"lmmse_window and lmmse_slices must be positive and lmmse_loading nonnegative"));
        }
        let b = &self.bench;
        if b.batch_size == 0 || b.batch_sizes.is_empty() || b.batch_sizes.contains(&0) || b.signal_length == 0 {
            return Err(cfg("bench", &"batch sizes and signal_length must be positive"));
        }
        if !(b.duration_s > 0.0) || !(b.time_scale > 0.0) || b.trials == 0 {
            return Err(cfg("bench", &"duration_s, time_scale and trials must be positive"));
        }
        if b.stub_tau_s.is_some_and(|t| !(t >= 0.0)) {
            return Err(cfg("bench", &"stub_tau_s must be nonnegative"));
        }
        Ok(())
    }

    pub fn soi_band(&self) -> Result<rfsep_core::signal::FrequencyBand> {
        match self.dataset.soi_band {
            Some(b) => Ok(b),
            None => Ok(carson_band(&self.task.fm)?),
        }
    }

    /// Hash of everything except the run directory.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        hash_json(&serde_json::to_value(&c).expect("config serializes"))
    }

    /// Identifies the generated sources.
    pub fn source_hash(&self) -> String {
        hash_json(&serde_json::json!({ "task": self.task }))
    }

    /// Identifies the mixed dataset.
    pub fn data_hash(&self) -> String {
        hash_json(&serde_json::json!({ "task": self.task, "dataset": self.dataset }))
    }

    /// Identifies a trained model: its data, architecture and training recipe.
    pub fn model_hash(&self) -> String {
        hash_json(&serde_json::json!({ "data": self.data_hash(), "model": self.model, "train": self.train, "init": self.init_seed() }))
    }

    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({ "config_hash": self.config_hash(), "data_hash": self.data_hash(), "seed": self.seed })
    }

    /// First line of every CSV the tool writes.
    pub fn csv_comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash(), self.seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

fn hash_json(v: &serde_json::Value) -> String {
    let digest = Sha256::digest(serde_json::to_vec(v).expect("JSON value serializes"));
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Tables merge key by key, except that a table whose `kind` or `mode` tag
/// differs from the default replaces it wholesale.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) if same_variant(b, &u) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn same_variant(base: &toml::Table, user: &toml::Table) -> bool {
    ["kind", "mode"].iter().all(|tag| match (base.get(*tag), user.get(*tag)) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    })
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key {key:?}")));
    }
    let mut user = toml::Table::new();
    let mut cursor = &mut user;
    for p in &parts[..parts.len() - 1] {
        cursor = match cursor.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => unreachable!("fresh entries are tables"),
        };
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    merge(table, user);
    Ok(())
}

/// Parses `key=value`; the value is read as TOML, falling back to a bare string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("override {s:?} is not KEY=VALUE")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {v}")) {
        Ok(mut t) => t.remove("v").expect("parsed key is present"),
        Err(_) => toml::Value::String(v.to_string()),
    };
    Ok((k.trim().to_string(), value))
}
