use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::optim::{Adam, AdamHyper, Nag, NagVariant, Optimizer, S3Hyper, Sgdm, SignSgd, S3};
use crate::problems::ProblemConfig;

use super::Schedule;

/// Optimizer selection in run configs, keyed by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    S3 {
        #[serde(default = "default_s3_beta")]
        beta: f64,
        #[serde(default = "default_s3_p")]
        p: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        weight_decay: f64,
        #[serde(default)]
        update_clip: Option<f64>,
    },
    /// Heavy-ball momentum; `momentum = 0` is plain SGD.
    Sgdm {
        #[serde(default)]
        momentum: f64,
    },
    Signsgd {},
    Nag {
        variant: NagVariant,
        #[serde(default = "default_beta1")]
        beta: f64,
    },
}

fn default_s3_beta() -> f64 {
    0.95
}
fn default_s3_p() -> f64 {
    3.0
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn s3(beta: f64, p: f64) -> Self {
        OptimizerConfig::S3 {
            beta,
            p,
            weight_decay: 0.0,
        }
    }

    /// Adam with epsilon 0, as used by the bound checks.
    pub fn adam_exact(beta1: f64, beta2: f64) -> Self {
        OptimizerConfig::Adam {
            beta1,
            beta2,
            epsilon: 0.0,
            weight_decay: 0.0,
            update_clip: None,
        }
    }

    pub fn build(&self, dim: usize) -> Result<Box<dyn Optimizer>> {
        Ok(match *self {
            OptimizerConfig::S3 {
                beta,
                p,
                weight_decay,
            } => {
                let hyper = S3Hyper::new(beta, p)?.with_weight_decay(weight_decay)?;
                Box::new(S3::new(dim, hyper)?)
            }
            OptimizerConfig::Adam {
                beta1,
                beta2,
                epsilon,
                weight_decay,
                update_clip,
            } => {
                let hyper = AdamHyper {
                    beta1,
                    beta2,
                    epsilon,
                    weight_decay,
                    update_clip,
                };
                Box::new(Adam::new(dim, hyper)?)
            }
            OptimizerConfig::Sgdm { momentum } => Box::new(Sgdm::new(dim, momentum)?),
            OptimizerConfig::Signsgd {} => Box::new(SignSgd::new()),
            OptimizerConfig::Nag { variant, beta } => Box::new(Nag::new(dim, variant, beta)?),
        })
    }

    /// `(beta1, beta2)` when the step-wise Adam ratio bound applies to this
    /// optimizer's updates (Adam with epsilon 0 and no clipping).
    pub fn adam_bound_betas(&self) -> Option<(f64, f64)> {
        match *self {
            OptimizerConfig::Adam {
                beta1,
                beta2,
                epsilon,
                update_clip: None,
                ..
            } if epsilon == 0.0 && beta1 * beta1 < beta2 => Some((beta1, beta2)),
            _ => None,
        }
    }

    /// Whether every update coordinate is bounded by 1 (single-coefficient S3).
    pub fn has_unit_bound(&self) -> bool {
        matches!(self, OptimizerConfig::S3 { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryConfig {
    #[serde(default = "default_spike_window")]
    pub spike_window: usize,
    #[serde(default = "default_spike_threshold")]
    pub spike_threshold: f64,
    /// Global l2 gradient clipping threshold; off when `None`.
    #[serde(default)]
    pub grad_clip: Option<f64>,
    /// Keep the full parameter trajectory in the record.
    #[serde(default)]
    pub record_params: bool,
}

fn default_spike_window() -> usize {
    100
}
fn default_spike_threshold() -> f64 {
    2.0
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            spike_window: default_spike_window(),
            spike_threshold: default_spike_threshold(),
            grad_clip: None,
            record_params: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
    pub schedule: Schedule,
    pub seed: u64,
    pub steps: u64,
    #[serde(default)]
    pub telemetry: TelemetryConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.steps > self.schedule.total_steps {
            return Err(Error::Config(format!(
                "steps ({}) exceeds schedule.total_steps ({})",
                self.steps, self.schedule.total_steps
            )));
        }
        if let Some(c) = self.telemetry.grad_clip {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidHyper {
                    name: "grad_clip",
                    value: c,
                    reason: "must be finite and > 0",
                });
            }
        }
        // surfaces hyperparameter errors before any step runs
        self.optimizer.build(1)?;
        if self.telemetry.spike_window < 8 {
            return Err(Error::Config("telemetry.spike_window must be >= 8".into()));
        }
        if !(self.telemetry.spike_threshold > 1.0) {
            return Err(Error::Config(
                "telemetry.spike_threshold must be > 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Applies `key=value` overrides with dotted keys, e.g.
    /// `optimizer.p=0.5`. Keys must already exist in the fully populated
    /// config; values are parsed as JSON, falling back to a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        apply_overrides(&mut value, overrides)?;
        let cfg: RunConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sets dotted `key=value` pairs inside a JSON document. Unknown keys are
/// errors.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
        let parsed: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node.as_object_mut().ok_or_else(|| {
                Error::Config(format!(
                    "override key {key:?}: {part:?} is not inside an object"
                ))
            })?;
            if !obj.contains_key(*part) {
                return Err(Error::Config(format!("unknown override key {key:?}")));
            }
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), parsed.clone());
                break;
            }
            node = obj.get_mut(*part).expect("checked above");
        }
    }
    Ok(())
}
