use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use encbench::tune::GridSpec;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub log_level: Option<String>,
    pub corpus: CorpusConfig,
    pub bpe: BpeConfig,
    pub tune: TuneConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub shard_bytes: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpeConfig {
    pub vocab_size: Option<usize>,
    pub min_pair_frequency: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub batch_sizes: Option<Vec<u32>>,
    pub learning_rates: Option<Vec<f64>>,
    pub max_epochs: Option<u32>,
    pub patience: Option<u32>,
    pub warmup_fraction: Option<f64>,
    pub replicates: Option<u32>,
    pub journal_dir: Option<PathBuf>,
    pub lr_scale: Option<f64>,
    pub tokenizer: Option<PathBuf>,
    pub tasks: BTreeMap<String, TaskPaths>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskPaths {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub sequence_length: Option<u32>,
}

impl TuneConfig {
    pub fn grid(&self, seed: u64) -> GridSpec {
        let d = GridSpec::default();
        GridSpec {
            batch_sizes: self.batch_sizes.clone().unwrap_or(d.batch_sizes),
            learning_rates: self.learning_rates.clone().unwrap_or(d.learning_rates),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            patience: self.patience.unwrap_or(d.patience),
            warmup_fraction: self.warmup_fraction.unwrap_or(d.warmup_fraction),
            seed,
            replicates: self.replicates.unwrap_or(d.replicates),
        }
    }
}

/// Configuration after applying flags over the file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: RunConfig,
    pub seed: u64,
    pub workers: usize,
    pub log_level: String,
}

impl Settings {
    pub fn resolve(path: Option<&Path>, seed: Option<u64>, workers: Option<usize>, log_level: Option<&str>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => load(p)?,
            None => RunConfig::default(),
        };
        let seed = seed.or(config.seed).unwrap_or(DEFAULT_SEED);
        let workers = workers
            .or(config.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        let log_level = log_level.map(str::to_string).or(config.log_level.clone()).unwrap_or_else(|| "info".into());
        config.seed = Some(seed);
        config.workers = Some(workers);
        config.log_level = Some(log_level.clone());
        Ok(Settings {
            config,
            seed,
            workers,
            log_level,
        })
    }

    pub fn shard_bytes(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.corpus.shard_bytes)
            .unwrap_or(encbench::corpus::DEFAULT_SHARD_BYTES)
    }
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(config)
}
