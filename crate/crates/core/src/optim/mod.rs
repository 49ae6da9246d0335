//! Single-step update rules.
//!
//! Every optimizer owns its state and advances it one step at a time. On any
//! error the state and the parameters are left exactly as they were.

mod adam;
mod nag;
mod s3;
mod sgd;

pub use adam::{Adam, AdamHyper};
pub use nag::{Nag, NagHyper, NagVariant};
pub use s3::{S3Hyper, S3TwoBeta, S3};
pub use sgd::{Sgdm, SgdmHyper, SignSgd};

pub(crate) use s3::check_power;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ParamVector;

/// Per-step quantities exposed for telemetry and theorem checks.
///
/// `update` is the direction actually scaled by the learning rate
/// (`numerator / denominator` for the adaptive methods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepIntermediates {
    pub numerator: ParamVector,
    pub denominator: ParamVector,
    pub update: ParamVector,
}

impl StepIntermediates {
    fn unit_denominator(update: ParamVector) -> Self {
        Self {
            numerator: update.clone(),
            denominator: ParamVector::filled(update.dim(), 1.0),
            update,
        }
    }
}

/// Gradient supplier: returns the (possibly stochastic) gradient at a point.
pub type GradFn<'a> = dyn FnMut(&ParamVector) -> Result<ParamVector> + 'a;

pub trait Optimizer: Send {
    fn name(&self) -> &'static str;

    /// Advances one step. Most rules evaluate `grad_at(x)` once; Nesterov
    /// form I evaluates it at the extrapolated point.
    fn step(
        &mut self,
        x: &mut ParamVector,
        grad_at: &mut GradFn<'_>,
        lr: f64,
    ) -> Result<StepIntermediates>;

    fn steps_taken(&self) -> u64;

    /// JSON snapshot with the fields `m`, `s`/`v`, `t` and `hyper`.
    fn snapshot(&self) -> serde_json::Value;
}

fn check_lr(lr: f64) -> Result<()> {
    if lr >= 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name: "lr",
            value: lr,
            reason: "learning rate must be finite and >= 0",
        })
    }
}

fn check_inputs(state_dim: usize, x: &ParamVector, g: &ParamVector) -> Result<()> {
    if x.dim() != state_dim {
        return Err(Error::DimensionMismatch {
            expected: state_dim,
            actual: x.dim(),
        });
    }
    if g.dim() != state_dim {
        return Err(Error::DimensionMismatch {
            expected: state_dim,
            actual: g.dim(),
        });
    }
    x.ensure_finite("parameters")?;
    g.ensure_finite("gradient")
}

/// `x - lr * update - lr * weight_decay * x`, checked for finiteness.
fn apply_update(
    x: &ParamVector,
    update: &ParamVector,
    lr: f64,
    weight_decay: f64,
) -> Result<ParamVector> {
    let next = ParamVector::new(
        x.iter()
            .zip(update.iter())
            .map(|(&xi, &ui)| xi - lr * ui - lr * weight_decay * xi)
            .collect(),
    )?;
    next.ensure_finite("updated parameters")?;
    Ok(next)
}

fn check_unit_interval(name: &'static str, value: f64, allow_one: bool) -> Result<()> {
    let ok = value >= 0.0 && if allow_one { value <= 1.0 } else { value < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name,
            value,
            reason: if allow_one {
                "must lie within [0, 1]"
            } else {
                "must lie within [0, 1)"
            },
        })
    }
}

fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
