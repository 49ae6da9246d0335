use serde::{Deserialize, Serialize};

use super::{check_inputs, check_lr, check_unit_interval, GradFn, Optimizer, StepIntermediates};
use crate::error::{Error, Result};
use crate::numerics::ParamVector;

/// The three equivalent ways of writing Nesterov momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NagVariant {
    /// Gradient at the look-ahead point `x~ - lr * beta * m`, then
    /// `x~' = x~ - lr * m'`.
    I,
    /// Gradient at the iterate, step along `beta * m' + (1 - beta) * g`.
    II,
    /// Gradient at the iterate, step along `m' + beta * r'` where `r` is an
    /// average of gradient differences.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NagHyper {
    pub variant: NagVariant,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nag {
    pub hyper: NagHyper,
    m: ParamVector,
    /// Only variant III reads or writes `r` and `g_prev`.
    r: ParamVector,
    g_prev: ParamVector,
    t: u64,
}

impl Nag {
    pub fn new(dim: usize, variant: NagVariant, beta: f64) -> Result<Self> {
        check_unit_interval("beta", beta, false)?;
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            hyper: NagHyper { variant, beta },
            m: ParamVector::zeros(dim),
            r: ParamVector::zeros(dim),
            g_prev: ParamVector::zeros(dim),
            t: 0,
        })
    }

    pub fn variant(&self) -> NagVariant {
        self.hyper.variant
    }

    pub fn momentum(&self) -> &ParamVector {
        &self.m
    }

    /// For variant I: the point where the next gradient will be evaluated,
    /// `x~ - lr * beta * m`. This is the iterate that variants II and III
    /// track.
    pub fn lookahead(&self, x_tilde: &ParamVector, lr: f64) -> ParamVector {
        let c = lr * self.hyper.beta;
        ParamVector::new(
            x_tilde
                .iter()
                .zip(self.m.iter())
                .map(|(&x, &m)| x - c * m)
                .collect(),
        )
        .expect("same dimension")
    }
}

impl Optimizer for Nag {
    fn name(&self) -> &'static str {
        match self.hyper.variant {
            NagVariant::I => "nag1",
            NagVariant::II => "nag2",
            NagVariant::III => "nag3",
        }
    }

    fn step(
        &mut self,
        x: &mut ParamVector,
        grad_at: &mut GradFn<'_>,
        lr: f64,
    ) -> Result<StepIntermediates> {
        check_lr(lr)?;
        let beta = self.hyper.beta;
        let probe = match self.hyper.variant {
            NagVariant::I => self.lookahead(x, lr),
            NagVariant::II | NagVariant::III => x.clone(),
        };
        let g = grad_at(&probe)?;
        check_inputs(self.m.dim(), x, &g)?;

        let d = g.dim();
        let m: Vec<f64> = (0..d)
            .map(|j| beta * self.m[j] + (1.0 - beta) * g[j])
            .collect();
        let mut r = None;
        let direction: Vec<f64> = match self.hyper.variant {
            NagVariant::I => m.clone(),
            NagVariant::II => (0..d).map(|j| beta * m[j] + (1.0 - beta) * g[j]).collect(),
            NagVariant::III => {
                let rn: Vec<f64> = (0..d)
                    .map(|j| beta * self.r[j] + (1.0 - beta) * (g[j] - self.g_prev[j]))
                    .collect();
                let dir = (0..d).map(|j| m[j] + beta * rn[j]).collect();
                r = Some(rn);
                dir
            }
        };
        let direction = ParamVector::new(direction)?;
        direction.ensure_finite("nesterov direction")?;
        let next = super::apply_update(x, &direction, lr, 0.0)?;

        self.m = ParamVector::new(m)?;
        if let Some(rn) = r {
            self.r = ParamVector::new(rn)?;
            self.g_prev = g;
        }
        self.t += 1;
        *x = next;
        Ok(StepIntermediates::unit_denominator(direction))
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

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    fn half_square(x: &ParamVector) -> Result<ParamVector> {
        Ok(x.clone())
    }

    #[test]
    fn one_step_by_hand_on_half_square() {
        let (beta, lr) = (0.9, 0.1);
        let mut nag1 = Nag::new(1, NagVariant::I, beta).unwrap();
        let mut x_tilde = pv(&[1.0]);
        nag1.step(&mut x_tilde, &mut half_square, lr).unwrap();
        assert!((x_tilde[0] - 0.99).abs() < 1e-15);

        // x_1 = x~_1 - lr * beta * m_0 = 1
        let mut nag2 = Nag::new(1, NagVariant::II, beta).unwrap();
        let mut x = pv(&[1.0]);
        nag2.step(&mut x, &mut half_square, lr).unwrap();
        assert!((x[0] - 0.981).abs() < 1e-15);
        assert!((nag1.lookahead(&x_tilde, lr)[0] - x[0]).abs() < 1e-15);
    }

    #[test]
    fn zero_beta_is_sgd_for_every_variant() {
        for variant in [NagVariant::I, NagVariant::II, NagVariant::III] {
            let mut opt = Nag::new(2, variant, 0.0).unwrap();
            let mut x = pv(&[1.0, -2.0]);
            for _ in 0..5 {
                let before = x.clone();
                opt.step(&mut x, &mut half_square, 0.25).unwrap();
                assert_eq!(x, before.scaled(0.75), "{variant:?}");
            }
        }
    }

    #[test]
    fn variants_one_and_two_never_touch_auxiliary_state() {
        for variant in [NagVariant::I, NagVariant::II] {
            let mut opt = Nag::new(1, variant, 0.9).unwrap();
            let mut x = pv(&[3.0]);
            for _ in 0..10 {
                opt.step(&mut x, &mut half_square, 0.1).unwrap();
            }
            assert!(opt.r.is_zero() && opt.g_prev.is_zero());
        }
    }

    #[test]
    fn failed_gradient_leaves_state() {
        let mut opt = Nag::new(1, NagVariant::III, 0.9).unwrap();
        let mut x = pv(&[1.0]);
        opt.step(&mut x, &mut half_square, 0.1).unwrap();
        let before = (opt.clone(), x.clone());
        let mut failing =
            |_: &ParamVector| -> Result<ParamVector> { Err(Error::Domain("test".into())) };
        assert!(opt.step(&mut x, &mut failing, 0.1).is_err());
        assert_eq!((opt, x), before);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut opt = Nag::new(2, NagVariant::III, 0.5).unwrap();
        let mut x = pv(&[1.0, 2.0]);
        opt.step(&mut x, &mut half_square, 0.1).unwrap();
        let back: Nag = serde_json::from_value(opt.snapshot()).unwrap();
        assert_eq!(back, opt);
    }
}
