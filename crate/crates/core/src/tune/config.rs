use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Bmc,
    Nemo,
    Smcd,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Bmc, Task::Nemo, Task::Smcd];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Bmc => "BMC",
            Task::Nemo => "NEMO",
            Task::Smcd => "SMCD",
        }
    }

    pub fn is_ner(self) -> bool {
        matches!(self, Task::Bmc | Task::Nemo)
    }

    /// Selection and headline metric.
    pub fn metric(self) -> Metric {
        if self.is_ner() {
            Metric::SpanMicroF1
        } else {
            Metric::MacroF1
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bmc" => Ok(Task::Bmc),
            "nemo" => Ok(Task::Nemo),
            "smcd" | "sentiment" => Ok(Task::Smcd),
            other => Err(Error::invalid(format!("unknown task {other:?} (expected bmc, nemo or smcd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SpanMicroF1,
    SpanMacroF1,
    MacroF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub task: Task,
    pub batch_size: u32,
    pub learning_rate: f64,
    pub max_epochs: u32,
    pub patience: u32,
    pub warmup_fraction: f64,
    pub sequence_length: u32,
    pub seed: u64,
    pub metric: Metric,
}

impl TrialConfig {
    /// Key used by the journal; `trainer` identifies the learner so that
    /// records from a different trainer are never reused.
    pub fn hash(&self, trainer: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(trainer.as_bytes());
        hasher.update([0u8]);
        hasher.update(serde_json::to_vec(self).expect("config serializes"));
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Search space and fixed protocol settings for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub batch_sizes: Vec<u32>,
    pub learning_rates: Vec<f64>,
    pub max_epochs: u32,
    pub patience: u32,
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Seeds per configuration. With 1 every configuration shares `seed`.
    pub replicates: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            batch_sizes: vec![16, 32],
            learning_rates: vec![5e-6, 7e-6, 1e-5, 2e-5, 5e-5],
            max_epochs: 30,
            patience: 3,
            warmup_fraction: 0.1,
            seed: 42,
            replicates: 1,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_sizes.is_empty() || self.learning_rates.is_empty() {
            return Err(Error::invalid("grid needs at least one batch size and one learning rate"));
        }
        if self.batch_sizes.contains(&0) {
            return Err(Error::invalid("batch sizes must be positive"));
        }
        if self.learning_rates.iter().any(|lr| !(lr.is_finite() && *lr > 0.0)) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if self.patience == 0 || self.max_epochs == 0 || self.replicates == 0 {
            return Err(Error::invalid("patience, max_epochs and replicates must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::invalid("warmup_fraction must lie in [0,1)"));
        }
        Ok(())
    }
}

/// Cartesian product, batch size ascending, then learning rate ascending.
pub fn enumerate_grid(grid: &GridSpec, task: Task, sequence_length: u32) -> Result<Vec<TrialConfig>> {
    grid.validate()?;
    let mut batches = grid.batch_sizes.clone();
    batches.sort_unstable();
    batches.dedup();
    let mut rates = grid.learning_rates.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let mut out = Vec::with_capacity(batches.len() * rates.len() * grid.replicates as usize);
    for &batch_size in &batches {
        for &learning_rate in &rates {
            for r in 0..grid.replicates {
                let seed = if grid.replicates == 1 { grid.seed } else { rng::derive_seed(grid.seed, r as u64) };
                out.push(TrialConfig {
                    task,
                    batch_size,
                    learning_rate,
                    max_epochs: grid.max_epochs,
                    patience: grid.patience,
                    warmup_fraction: grid.warmup_fraction,
                    sequence_length,
                    seed,
                    metric: task.metric(),
                });
            }
        }
    }
    Ok(out)
}
