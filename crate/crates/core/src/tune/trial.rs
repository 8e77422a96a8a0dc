use std::cmp::Ordering;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use super::trainer::{EpochContext, Split, TaskData, Trainer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    EpochCap,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config_hash: String,
    pub trainer: String,
    pub config: TrialConfig,
    pub per_epoch_valid_scores: Vec<f64>,
    /// 1-based; 0 when no epoch finished.
    pub best_epoch: u32,
    pub test_score: Option<f64>,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_ms: u64,
}

impl TrialRecord {
    pub fn best_valid_score(&self) -> Option<f64> {
        self.best_epoch
            .checked_sub(1)
            .and_then(|i| self.per_epoch_valid_scores.get(i as usize))
            .copied()
    }

    pub fn epochs_run(&self) -> usize {
        self.per_epoch_valid_scores.len()
    }
}

/// Index of the first maximum, 1-based; 0 for an empty list.
fn first_argmax(scores: &[f64]) -> u32 {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map_or(0, |(i, _)| i as u32 + 1)
}

/// Trains until the validation score fails to improve (strictly) for
/// `patience` consecutive epochs or `max_epochs` is reached. The test split
/// is scored only when `evaluate_test` is set, using the best-epoch state.
pub fn run_trial<T: Trainer>(config: &TrialConfig, trainer: &T, data: &TaskData, evaluate_test: bool) -> TrialRecord {
    let started = Instant::now();
    let mut scores = Vec::new();
    let outcome = train_loop(config, trainer, data, evaluate_test, &mut scores);
    let best_epoch = first_argmax(&scores);
    let (stop_reason, test_score, error) = match outcome {
        Ok((reason, test)) => (reason, test, None),
        Err(e) => (StopReason::Error, None, Some(e.to_string())),
    };
    TrialRecord {
        config_hash: config.hash(&trainer.identity()),
        trainer: trainer.identity(),
        config: config.clone(),
        per_epoch_valid_scores: scores,
        best_epoch,
        test_score,
        stop_reason,
        error,
        wall_time_ms: started.elapsed().as_millis() as u64,
    }
}

fn train_loop<T: Trainer>(
    config: &TrialConfig,
    trainer: &T,
    data: &TaskData,
    evaluate_test: bool,
    scores: &mut Vec<f64>,
) -> Result<(StopReason, Option<f64>)> {
    if config.patience == 0 || config.max_epochs == 0 {
        return Err(Error::invalid("patience and max_epochs must be at least 1"));
    }
    let mut state = trainer.init(config, data)?;
    let mut best: Option<(f64, T::State)> = None;
    let mut stale = 0;
    let mut reason = StopReason::EpochCap;
    for epoch in 1..=config.max_epochs {
        let ctx = EpochContext::new(config, data.train_size(), epoch)?;
        trainer.train_one_epoch(&mut state, config, &ctx, data)?;
        let score = trainer.evaluate(&state, config, Split::Valid, data)?;
        if !score.is_finite() {
            return Err(Error::Trainer(format!("non-finite validation score at epoch {epoch}")));
        }
        scores.push(score);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, state.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                reason = StopReason::EarlyStop;
                break;
            }
        }
    }
    let test = match (evaluate_test, best) {
        (true, Some((_, s))) => Some(trainer.evaluate(&s, config, Split::Test, data)?),
        _ => None,
    };
    Ok((reason, test))
}

/// Lower is better: higher validation score, then smaller LR, then smaller
/// batch, then earlier position.
fn selection_order(a: &TrialRecord, b: &TrialRecord) -> Ordering {
    let sa = a.best_valid_score().unwrap_or(f64::NEG_INFINITY);
    let sb = b.best_valid_score().unwrap_or(f64::NEG_INFINITY);
    sb.total_cmp(&sa)
        .then(a.config.learning_rate.total_cmp(&b.config.learning_rate))
        .then(a.config.batch_size.cmp(&b.config.batch_size))
}

/// Index of the winning record among those that finished without error.
pub fn select_best(records: &[TrialRecord]) -> Result<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.stop_reason != StopReason::Error && r.best_epoch > 0)
        .min_by(|(i, a), (j, b)| selection_order(a, b).then(i.cmp(j)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("no completed trial to select from"))
}
