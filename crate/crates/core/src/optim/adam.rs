use serde::{Deserialize, Serialize};

use super::{
    apply_update, check_inputs, check_lr, check_nonnegative, check_unit_interval, GradFn,
    Optimizer, StepIntermediates,
};
use crate::error::{Error, Result};
use crate::numerics::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    /// Added to `sqrt(v)`. Zero reproduces the bare ratio `m / sqrt(v)`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Decoupled (AdamW) weight decay.
    #[serde(default)]
    pub weight_decay: f64,
    /// Clamp every update coordinate to `[-c, c]` before applying it.
    #[serde(default)]
    pub update_clip: Option<f64>,
}

fn default_epsilon() -> f64 {
    1e-8
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: default_epsilon(),
            weight_decay: 0.0,
            update_clip: None,
        }
    }
}

impl AdamHyper {
    /// Bare ratio form: no epsilon, no decay, no clipping.
    pub fn exact(beta1: f64, beta2: f64) -> Result<Self> {
        let h = Self {
            beta1,
            beta2,
            epsilon: 0.0,
            weight_decay: 0.0,
            update_clip: None,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("beta1", self.beta1, false)?;
        check_unit_interval("beta2", self.beta2, false)?;
        check_nonnegative("epsilon", self.epsilon)?;
        check_nonnegative("weight_decay", self.weight_decay)?;
        if let Some(c) = self.update_clip {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidHyper {
                    name: "update_clip",
                    value: c,
                    reason: "clip bound must be finite and > 0",
                });
            }
        }
        Ok(())
    }
}

/// Adam with bias correction, optional decoupled weight decay (AdamW) and
/// optional per-coordinate update clipping.
///
/// The raw moments serialize as `m` and `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adam {
    pub hyper: AdamHyper,
    #[serde(rename = "m")]
    m_tilde: ParamVector,
    #[serde(rename = "v")]
    v_tilde: ParamVector,
    t: u64,
}

impl Adam {
    pub fn new(dim: usize, hyper: AdamHyper) -> Result<Self> {
        hyper.validate()?;
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            hyper,
            m_tilde: ParamVector::zeros(dim),
            v_tilde: ParamVector::zeros(dim),
            t: 0,
        })
    }

    pub fn raw_first_moment(&self) -> &ParamVector {
        &self.m_tilde
    }

    pub fn raw_second_moment(&self) -> &ParamVector {
        &self.v_tilde
    }

    /// Rescales the gradient history as if every past gradient had been
    /// multiplied by `c > 0`. With `epsilon = 0` the next update is unchanged
    /// when the incoming gradient is scaled the same way.
    pub fn rescale_history(&mut self, c: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidHyper {
                name: "c",
                value: c,
                reason: "rescale factor must be finite and > 0",
            });
        }
        self.m_tilde = self.m_tilde.scaled(c);
        self.v_tilde = self.v_tilde.scaled(c * c);
        Ok(())
    }

    pub fn step_with_grad(
        &mut self,
        x: &mut ParamVector,
        g: &ParamVector,
        lr: f64,
    ) -> Result<StepIntermediates> {
        check_lr(lr)?;
        check_inputs(self.m_tilde.dim(), x, g)?;
        let h = self.hyper;
        let t = self.t + 1;
        let bc1 = 1.0 - h.beta1.powf(t as f64);
        let bc2 = 1.0 - h.beta2.powf(t as f64);
        let d = g.dim();
        let mut m_new = Vec::with_capacity(d);
        let mut v_new = Vec::with_capacity(d);
        let mut num = Vec::with_capacity(d);
        let mut den = Vec::with_capacity(d);
        let mut upd = Vec::with_capacity(d);
        for j in 0..d {
            let gj = g[j];
            let mt = h.beta1 * self.m_tilde[j] + (1.0 - h.beta1) * gj;
            let vt = h.beta2 * self.v_tilde[j] + (1.0 - h.beta2) * gj * gj;
            let m_hat = mt / bc1;
            let denom = (vt / bc2).sqrt() + h.epsilon;
            if denom == 0.0 {
                return Err(Error::DivisionByZero { index: j });
            }
            let mut u = m_hat / denom;
            if !u.is_finite() {
                return Err(Error::NonFinite {
                    index: j,
                    value: u,
                    context: "adam update",
                });
            }
            if let Some(c) = h.update_clip {
                u = u.clamp(-c, c);
            }
            m_new.push(mt);
            v_new.push(vt);
            num.push(m_hat);
            den.push(denom);
            upd.push(u);
        }
        let update = ParamVector::new(upd)?;
        let next = apply_update(x, &update, lr, h.weight_decay)?;
        self.m_tilde = ParamVector::new(m_new)?;
        self.v_tilde = ParamVector::new(v_new)?;
        self.t = t;
        *x = next;
        Ok(StepIntermediates {
            numerator: ParamVector::new(num)?,
            denominator: ParamVector::new(den)?,
            update,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let a: Adam = serde_json::from_str(json)?;
        a.hyper.validate()?;
        a.m_tilde.ensure_same_dim(&a.v_tilde)?;
        a.m_tilde.ensure_finite("m")?;
        a.v_tilde.ensure_finite("v")?;
        if a.v_tilde.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("v must be nonnegative".into()));
        }
        if a.t == 0 && !(a.m_tilde.is_zero() && a.v_tilde.is_zero()) {
            return Err(Error::Config("t = 0 requires m = v = 0".into()));
        }
        Ok(a)
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_noise, RngStream};
    use crate::theory::adam_ratio_bound;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    #[test]
    fn first_step_is_sign() {
        let mut opt = Adam::new(3, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
        let mut x = pv(&[0.0; 3]);
        let step = opt
            .step_with_grad(&mut x, &pv(&[5.0, -0.01, 1e-4]), 1.0)
            .unwrap();
        for (u, s) in step.update.iter().zip([1.0, -1.0, 1.0]) {
            assert!((u - s).abs() < 1e-12, "{u}");
        }
    }

    #[test]
    fn constant_gradient_reduces_to_sign() {
        let mut opt = Adam::new(2, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
        let mut x = pv(&[0.0, 0.0]);
        let g = pv(&[0.3, -7.0]);
        for _ in 0..500 {
            let step = opt.step_with_grad(&mut x, &g, 1e-3).unwrap();
            assert!((step.update[0] - 1.0).abs() < 1e-9);
            assert!((step.update[1] + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn update_clip_bounds_every_coordinate() {
        let hyper = AdamHyper {
            update_clip: Some(1.0),
            ..AdamHyper::exact(0.9, 0.999).unwrap()
        };
        let mut clipped = Adam::new(1, hyper).unwrap();
        let mut free = Adam::new(1, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
        let (mut x1, mut x2) = (pv(&[0.0]), pv(&[0.0]));
        let mut max_free: f64 = 0.0;
        let mut g = 1.0;
        for _ in 0..400 {
            let a = clipped.step_with_grad(&mut x1, &pv(&[g]), 0.0).unwrap();
            let b = free.step_with_grad(&mut x2, &pv(&[g]), 0.0).unwrap();
            assert!(a.update[0].abs() <= 1.0);
            max_free = max_free.max(b.update[0].abs());
            g *= 0.999 / 0.9;
        }
        assert!(max_free > 1.0);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let hyper = AdamHyper {
            weight_decay: 0.1,
            ..AdamHyper::exact(0.9, 0.999).unwrap()
        };
        let mut opt = Adam::new(1, hyper).unwrap();
        let mut x = pv(&[5.0]);
        opt.step_with_grad(&mut x, &pv(&[2.0]), 0.01).unwrap();
        // update is sign(g) = 1 on the first step, decay is lr * wd * x
        assert!((x[0] - (5.0 - 0.01 - 0.01 * 0.1 * 5.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_without_epsilon_is_an_error() {
        let mut opt = Adam::new(1, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
        let mut x = pv(&[1.0]);
        assert_eq!(
            opt.step_with_grad(&mut x, &pv(&[0.0]), 0.1),
            Err(Error::DivisionByZero { index: 0 })
        );
        assert_eq!(opt.steps_taken(), 0);
        let mut opt = Adam::new(1, AdamHyper::default()).unwrap();
        assert!(opt
            .step_with_grad(&mut x, &pv(&[0.0]), 0.1)
            .unwrap()
            .update
            .is_zero());
    }

    #[test]
    fn history_rescale_is_a_noop_on_updates() {
        let mut rng = RngStream::new(5);
        let grads: Vec<_> = (0..40)
            .map(|_| gaussian_noise(&mut rng, 2, 1.0).unwrap())
            .collect();
        let mut plain = Adam::new(2, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
        let mut scaled = plain.clone();
        let (mut x1, mut x2) = (pv(&[0.0, 0.0]), pv(&[0.0, 0.0]));
        let mut c = 1.0;
        for (i, g) in grads.iter().enumerate() {
            if i % 10 == 9 {
                scaled.rescale_history(0.125).unwrap();
                c *= 0.125;
            }
            let a = plain.step_with_grad(&mut x1, g, 0.0).unwrap();
            let b = scaled.step_with_grad(&mut x2, &g.scaled(c), 0.0).unwrap();
            for (u, v) in a.update.iter().zip(b.update.iter()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn snapshot_uses_documented_fields() {
        let mut opt = Adam::new(2, AdamHyper::default()).unwrap();
        opt.step_with_grad(&mut pv(&[0.0, 0.0]), &pv(&[1.0, 2.0]), 0.1)
            .unwrap();
        let snap = opt.snapshot();
        for key in ["m", "v", "t", "hyper"] {
            assert!(snap.get(key).is_some(), "missing {key}");
        }
        assert_eq!(Adam::from_json(&snap.to_string()).unwrap(), opt);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ratio_never_exceeds_t_dependent_bound(
                grads in proptest::collection::vec(
                    proptest::collection::vec(-1e2f64..1e2, 2), 1..80),
                beta1 in 0.0f64..0.95,
                gap in 0.01f64..1.0,
            ) {
                // beta1^2 < beta2 < 1
                let lo = beta1 * beta1;
                let beta2 = lo + (1.0 - lo) * gap * 0.999;
                prop_assume!(grads.iter().flatten().all(|g| g.abs() > 1e-12));
                let mut opt = Adam::new(2, AdamHyper::exact(beta1, beta2).unwrap()).unwrap();
                let mut x = pv(&[0.0, 0.0]);
                for (i, g) in grads.iter().enumerate() {
                    let step = opt.step_with_grad(&mut x, &pv(g), 0.0).unwrap();
                    let bound = adam_ratio_bound(beta1, beta2, Some(i as u64 + 1)).unwrap();
                    for &u in &step.update {
                        prop_assert!(u.abs() <= bound + 1e-9, "{u} > {bound}");
                    }
                }
            }

            #[test]
            fn update_is_invariant_to_gradient_scale(
                grads in proptest::collection::vec(
                    proptest::collection::vec(0.01f64..1e2, 2), 1..40),
                c in 1e-3f64..1e3,
            ) {
                let mut a = Adam::new(2, AdamHyper::exact(0.9, 0.999).unwrap()).unwrap();
                let mut b = a.clone();
                let (mut x1, mut x2) = (pv(&[0.0, 0.0]), pv(&[0.0, 0.0]));
                for g in &grads {
                    let ua = a.step_with_grad(&mut x1, &pv(g), 0.1).unwrap().update;
                    let ub = b.step_with_grad(&mut x2, &pv(g).scaled(c), 0.1).unwrap().update;
                    for (u, v) in ua.iter().zip(ub.iter()) {
                        prop_assert!((u - v).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
