use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    WarmupCosine,
}

/// Learning-rate policy: constant, or a linear ramp from 0 to `peak_lr`
/// over `warmup_steps` followed by a cosine decay to
/// `floor_fraction * peak_lr` at `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub peak_lr: f64,
    #[serde(default)]
    pub warmup_steps: u64,
    pub total_steps: u64,
    #[serde(default)]
    pub floor_fraction: f64,
}

impl Schedule {
    pub fn constant(lr: f64, total_steps: u64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            peak_lr: lr,
            warmup_steps: 0,
            total_steps,
            floor_fraction: 1.0,
        }
    }

    pub fn warmup_cosine(
        peak_lr: f64,
        warmup_steps: u64,
        total_steps: u64,
        floor_fraction: f64,
    ) -> Result<Self> {
        let s = Self {
            kind: ScheduleKind::WarmupCosine,
            peak_lr,
            warmup_steps,
            total_steps,
            floor_fraction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) || !self.peak_lr.is_finite() {
            return Err(Error::InvalidHyper {
                name: "peak_lr",
                value: self.peak_lr,
                reason: "must be finite and > 0",
            });
        }
        if self.total_steps <= self.warmup_steps {
            return Err(Error::Config(format!(
                "schedule.total_steps ({}) must exceed schedule.warmup_steps ({})",
                self.total_steps, self.warmup_steps
            )));
        }
        if !(0.0..=1.0).contains(&self.floor_fraction) {
            return Err(Error::InvalidHyper {
                name: "floor_fraction",
                value: self.floor_fraction,
                reason: "must lie within [0, 1]",
            });
        }
        Ok(())
    }

    pub fn lr_at(&self, step: u64) -> Result<f64> {
        self.validate()?;
        if step > self.total_steps {
            return Err(Error::StepOutOfRange {
                step,
                total: self.total_steps,
            });
        }
        Ok(match self.kind {
            ScheduleKind::Constant => self.peak_lr,
            ScheduleKind::WarmupCosine => {
                if step < self.warmup_steps {
                    self.peak_lr * step as f64 / self.warmup_steps as f64
                } else {
                    let span = (self.total_steps - self.warmup_steps) as f64;
                    let progress = (step - self.warmup_steps) as f64 / span;
                    let cosine = 0.5 * (1.0 + (PI * progress).cos());
                    self.peak_lr * (self.floor_fraction + (1.0 - self.floor_fraction) * cosine)
                }
            }
        })
    }
}

/// Weight decay that keeps `lr * lambda` equal to the reference
/// `lr_adam * wd_adam` when moving to learning rate `lr`.
pub fn coupled_weight_decay(lr_adam: f64, wd_adam: f64, lr: f64) -> Result<f64> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::InvalidHyper {
            name: "lr",
            value: lr,
            reason: "must be finite and > 0",
        });
    }
    Ok(lr_adam * wd_adam / lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_and_cosine_landmarks() {
        let s = Schedule::warmup_cosine(6e-3, 30, 150, 0.0).unwrap();
        assert_eq!(s.lr_at(0).unwrap(), 0.0);
        assert!((s.lr_at(15).unwrap() - 3e-3).abs() < 1e-18);
        assert_eq!(s.lr_at(30).unwrap(), 6e-3);
        assert!((s.lr_at(90).unwrap() - 3e-3).abs() < 1e-15);
        assert!(s.lr_at(150).unwrap().abs() < 1e-18);
        assert!(matches!(s.lr_at(151), Err(Error::StepOutOfRange { .. })));

        let llm = Schedule::warmup_cosine(1.0, 10, 110, 0.1).unwrap();
        assert!((llm.lr_at(110).unwrap() - 0.1).abs() < 1e-15);
        assert!((llm.lr_at(60).unwrap() - 0.55).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_continuous_at_the_peak() {
        let s = Schedule::warmup_cosine(1.0, 1000, 5000, 0.0).unwrap();
        let below = s.lr_at(999).unwrap();
        let above = s.lr_at(1001).unwrap();
        assert!((below - 1.0).abs() < 2e-3 && (above - 1.0).abs() < 2e-3);
    }

    #[test]
    fn invalid_schedules() {
        assert!(Schedule::warmup_cosine(1.0, 10, 10, 0.0).is_err());
        assert!(Schedule::warmup_cosine(0.0, 1, 10, 0.0).is_err());
        assert!(Schedule::warmup_cosine(1.0, 1, 10, 1.5).is_err());
    }

    #[test]
    fn coupling_rule() {
        assert!((coupled_weight_decay(3e-4, 0.1, 3e-3).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(coupled_weight_decay(1e-3, 0.05, 1e-3).unwrap(), 0.05);
        let a = coupled_weight_decay(1e-3, 0.1, 2e-3).unwrap();
        let b = coupled_weight_decay(1e-3, 0.1, 1e-3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert!(coupled_weight_decay(1e-3, 0.1, 0.0).is_err());
    }
}
