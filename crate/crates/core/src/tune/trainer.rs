use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use crate::data::{LabeledText, TaggedSentence};
use crate::error::{Error, Result};
use crate::pretrain::ScheduleSpec;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Splits<T> {
    pub fn get(&self, split: Split) -> &[T] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }
}

/// Benchmark data handed to a trainer.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskData {
    Classification(Splits<LabeledText>),
    Tagging(Splits<TaggedSentence>),
    /// For trainers that script their scores; `train_size` sets the step count.
    Synthetic { train_size: usize },
}

impl TaskData {
    pub fn train_size(&self) -> usize {
        match self {
            TaskData::Classification(s) => s.train.len(),
            TaskData::Tagging(s) => s.train.len(),
            TaskData::Synthetic { train_size } => *train_size,
        }
    }
}

/// Where one epoch sits inside the planned fine-tuning run.
#[derive(Debug, Clone)]
pub struct EpochContext {
    /// 1-based.
    pub epoch: u32,
    pub steps_per_epoch: u64,
    pub schedule: ScheduleSpec<f64>,
}

impl EpochContext {
    pub fn new(config: &TrialConfig, train_size: usize, epoch: u32) -> Result<Self> {
        let steps_per_epoch = (train_size as u64).div_ceil(config.batch_size as u64).max(1);
        let total = steps_per_epoch * config.max_epochs as u64;
        let schedule = ScheduleSpec::fine_tuning(total, config.learning_rate, config.warmup_fraction)?;
        Ok(EpochContext {
            epoch,
            steps_per_epoch,
            schedule,
        })
    }

    /// Learning rate for the `i`-th update of this epoch.
    pub fn lr(&self, i: u64) -> f64 {
        self.schedule.lr_at((self.epoch as u64 - 1) * self.steps_per_epoch + i)
    }

    /// Seed for this epoch's data order.
    pub fn shuffle_seed(&self, config: &TrialConfig) -> u64 {
        rng::derive_seed(config.seed, self.epoch as u64)
    }
}

/// Contract between the harness and a learner. Implementations must be
/// deterministic given the config seed and the data, and `evaluate` must
/// not modify the state.
pub trait Trainer: Sync {
    type State: Clone + Send;

    /// Stable identity, part of every journal key.
    fn identity(&self) -> String;

    /// Whether trials may run on several threads at once.
    fn concurrent(&self) -> bool {
        true
    }

    fn init(&self, config: &TrialConfig, data: &TaskData) -> Result<Self::State>;

    fn train_one_epoch(&self, state: &mut Self::State, config: &TrialConfig, ctx: &EpochContext, data: &TaskData) -> Result<()>;

    /// Score in [0, 1] on `split`.
    fn evaluate(&self, state: &Self::State, config: &TrialConfig, split: Split, data: &TaskData) -> Result<f64>;
}

type ScoreFn = dyn Fn(&TrialConfig, u32) -> Result<f64> + Send + Sync;

/// Scripted trainer: the validation score after epoch `e` is `valid(config, e)`,
/// and the test score of a state trained for `e` epochs is `test(config, e)`.
#[derive(Clone)]
pub struct MockTrainer {
    valid: Arc<ScoreFn>,
    test: Arc<ScoreFn>,
    name: String,
    concurrent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockState {
    pub epochs_trained: u32,
    pub steps: u64,
}

impl MockTrainer {
    pub fn new<V>(name: &str, valid: V) -> Self
    where
        V: Fn(&TrialConfig, u32) -> Result<f64> + Send + Sync + 'static,
    {
        let valid: Arc<ScoreFn> = Arc::new(valid);
        let shadow = valid.clone();
        MockTrainer {
            valid,
            test: Arc::new(move |c, e| shadow(c, e).map(|s| s * 0.98)),
            name: name.to_string(),
            concurrent: true,
        }
    }

    pub fn with_test<T>(mut self, test: T) -> Self
    where
        T: Fn(&TrialConfig, u32) -> Result<f64> + Send + Sync + 'static,
    {
        self.test = Arc::new(test);
        self
    }

    pub fn sequential(mut self) -> Self {
        self.concurrent = false;
        self
    }

    /// Smooth response surface peaking near lr 2e-5, batch 16: rises to a
    /// plateau around epoch 4-8 and then decays, with seeded jitter.
    pub fn standard() -> Self {
        MockTrainer::new("mock-standard-v1", standard_curve)
    }
}

fn standard_curve(config: &TrialConfig, epoch: u32) -> Result<f64> {
    let x = config.learning_rate.log10() + 4.7;
    let peak = 0.80 + 0.12 * (-x * x * 4.0).exp() - if config.batch_size > 16 { 0.01 } else { 0.0 };
    let task_offset = match config.task {
        super::Task::Bmc => 0.05,
        super::Task::Nemo => 0.0,
        super::Task::Smcd => -0.03,
    };
    let tau = 1.0 + 2e-5 / config.learning_rate;
    let e = epoch as f64;
    let rise = 1.0 - (-e / tau).exp();
    let decay = 0.004 * (e - 3.0 * tau).max(0.0);
    let mut r = rng::seeded(rng::derive_seed(config.seed ^ config.batch_size as u64, config.learning_rate.to_bits() ^ epoch as u64));
    let jitter = (rng::unit(&mut r) - 0.5) * 0.004;
    Ok(((peak + task_offset) * rise - decay + jitter).clamp(0.0, 1.0))
}

impl Trainer for MockTrainer {
    type State = MockState;

    fn identity(&self) -> String {
        self.name.clone()
    }

    fn concurrent(&self) -> bool {
        self.concurrent
    }

    fn init(&self, _config: &TrialConfig, _data: &TaskData) -> Result<MockState> {
        Ok(MockState {
            epochs_trained: 0,
            steps: 0,
        })
    }

    fn train_one_epoch(&self, state: &mut MockState, _config: &TrialConfig, ctx: &EpochContext, _data: &TaskData) -> Result<()> {
        if ctx.epoch != state.epochs_trained + 1 {
            return Err(Error::Trainer(format!("epoch {} out of order", ctx.epoch)));
        }
        state.epochs_trained += 1;
        state.steps += ctx.steps_per_epoch;
        Ok(())
    }

    fn evaluate(&self, state: &MockState, config: &TrialConfig, split: Split, _data: &TaskData) -> Result<f64> {
        match split {
            Split::Test => (self.test)(config, state.epochs_trained),
            _ => (self.valid)(config, state.epochs_trained),
        }
    }
}
