use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::FloatScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    PolynomialDecay,
    Linear,
}

/// Linear warmup to `peak_lr`, then polynomial decay to `end_lr` at
/// `total_steps`. `Linear` is the `power = 1` case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec<F> {
    pub kind: ScheduleKind,
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub peak_lr: F,
    pub end_lr: F,
    pub power: F,
}

impl<F: FloatScalar> ScheduleSpec<F> {
    pub fn new(kind: ScheduleKind, total_steps: u64, warmup_steps: u64, peak_lr: F, end_lr: F, power: F) -> Result<Self> {
        let spec = ScheduleSpec {
            kind,
            total_steps,
            warmup_steps,
            peak_lr,
            end_lr,
            power,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup_steps >= self.total_steps {
            return Err(Error::invalid(format!(
                "warmup_steps ({}) must be below total_steps ({})",
                self.warmup_steps, self.total_steps
            )));
        }
        if !(self.peak_lr > self.end_lr && self.end_lr >= F::zero()) {
            return Err(Error::invalid("learning rates must satisfy peak_lr > end_lr >= 0"));
        }
        if self.kind == ScheduleKind::Linear && self.power != F::one() {
            return Err(Error::invalid("a linear schedule has power 1"));
        }
        Ok(())
    }

    fn pretraining(peak_lr: F) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::PolynomialDecay,
            total_steps: 100_000,
            warmup_steps: 10_000,
            peak_lr,
            end_lr: F::zero(),
            power: F::one(),
        }
    }

    /// 100k updates, 10k warmup, peak 4e-4.
    pub fn pretrain_base() -> Self {
        Self::pretraining(F::from_f64(4e-4).expect("representable"))
    }

    /// 100k updates, 10k warmup, peak 1.5e-4.
    pub fn pretrain_large() -> Self {
        Self::pretraining(F::from_f64(1.5e-4).expect("representable"))
    }

    /// Linear schedule with `round(warmup_fraction * total_steps)` warmup steps.
    pub fn fine_tuning(total_steps: u64, peak_lr: F, warmup_fraction: f64) -> Result<Self> {
        let warmup_steps = (warmup_fraction * total_steps as f64).round() as u64;
        Self::new(ScheduleKind::Linear, total_steps, warmup_steps, peak_lr, F::zero(), F::one())
    }

    pub fn lr_at(&self, step: u64) -> F {
        lr_at(step, self)
    }
}

pub fn lr_at<F: FloatScalar>(step: u64, spec: &ScheduleSpec<F>) -> F {
    if step < spec.warmup_steps {
        return spec.peak_lr * F::from_count(step) / F::from_count(spec.warmup_steps);
    }
    if step >= spec.total_steps {
        return spec.end_lr;
    }
    let remaining = F::from_count(spec.total_steps - step) / F::from_count(spec.total_steps - spec.warmup_steps);
    let decay = if spec.power == F::one() { remaining } else { remaining.powf(spec.power) };
    (spec.peak_lr - spec.end_lr) * decay + spec.end_lr
}
