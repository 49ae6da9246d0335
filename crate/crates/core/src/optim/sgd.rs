use serde::{Deserialize, Serialize};

use super::{apply_update, check_inputs, check_lr, GradFn, Optimizer, StepIntermediates};
use crate::error::{Error, Result};
use crate::numerics::{sign, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdmHyper {
    pub momentum: f64,
}

/// Heavy-ball SGD: `m' = momentum * m + g`, `x' = x - lr * m'`.
/// `momentum = 0` is plain SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sgdm {
    pub hyper: SgdmHyper,
    m: ParamVector,
    t: u64,
}

impl Sgdm {
    pub fn new(dim: usize, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidHyper {
                name: "momentum",
                value: momentum,
                reason: "must lie within [0, 1)",
            });
        }
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            hyper: SgdmHyper { momentum },
            m: ParamVector::zeros(dim),
            t: 0,
        })
    }

    pub fn momentum_buffer(&self) -> &ParamVector {
        &self.m
    }

    pub fn step_with_grad(
        &mut self,
        x: &mut ParamVector,
        g: &ParamVector,
        lr: f64,
    ) -> Result<StepIntermediates> {
        check_lr(lr)?;
        check_inputs(self.m.dim(), x, g)?;
        let mu = self.hyper.momentum;
        let m = ParamVector::new(
            self.m
                .iter()
                .zip(g.iter())
                .map(|(&mi, &gi)| mu * mi + gi)
                .collect(),
        )?;
        m.ensure_finite("momentum")?;
        let next = apply_update(x, &m, lr, 0.0)?;
        self.m = m.clone();
        self.t += 1;
        *x = next;
        Ok(StepIntermediates::unit_denominator(m))
    }
}

impl Optimizer for Sgdm {
    fn name(&self) -> &'static str {
        "sgdm"
    }

    fn step(
        &mut self,
        x: &mut ParamVector,
        grad_at: &mut GradFn<'_>,
        lr: f64,
    ) -> Result<StepIntermediates> {
        let g = grad_at(x)?;
        self.step_with_grad(x, &g, lr)
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("finite state serializes")
    }
}

/// `x' = x - lr * sign(g)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignSgd {
    t: u64,
}

impl SignSgd {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step_with_grad(
        &mut self,
        x: &mut ParamVector,
        g: &ParamVector,
        lr: f64,
    ) -> Result<StepIntermediates> {
        check_lr(lr)?;
        check_inputs(x.dim(), x, g)?;
        let update = g.map(sign);
        let next = apply_update(x, &update, lr, 0.0)?;
        self.t += 1;
        *x = next;
        Ok(StepIntermediates::unit_denominator(update))
    }
}

impl Optimizer for SignSgd {
    fn name(&self) -> &'static str {
        "signsgd"
    }

    fn step(
        &mut self,
        x: &mut ParamVector,
        grad_at: &mut GradFn<'_>,
        lr: f64,
    ) -> Result<StepIntermediates> {
        let g = grad_at(x)?;
        self.step_with_grad(x, &g, lr)
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({ "t": self.t, "hyper": {} })
    }
}
