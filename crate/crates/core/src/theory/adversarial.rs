use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ParamVector;
use crate::optim::{Adam, AdamHyper};

use super::adam_ratio_bound;

fn check_inputs(beta1: f64, beta2: f64, g0: f64) -> Result<()> {
    if !(beta1 > 0.0 && beta1 <= beta2 && beta2 < 1.0) {
        return Err(Error::Precondition(format!(
            "0 < beta1 <= beta2 < 1 is required (beta1 = {beta1}, beta2 = {beta2})"
        )));
    }
    if !(g0 > 0.0) || !g0.is_finite() {
        return Err(Error::InvalidHyper {
            name: "g0",
            value: g0,
            reason: "must be finite and > 0",
        });
    }
    Ok(())
}

/// `g_t = g0 (beta2 / beta1)^t` for `t = 0..steps`: the scalar stream that
/// drives Adam's update ratio to its bound.
pub fn adversarial_sequence(beta1: f64, beta2: f64, g0: f64, steps: usize) -> Result<Vec<f64>> {
    check_inputs(beta1, beta2, g0)?;
    if steps == 0 {
        return Err(Error::Precondition("steps must be >= 1".into()));
    }
    let ratio = beta2 / beta1;
    let mut out = Vec::with_capacity(steps);
    let mut g = g0;
    for t in 0..steps {
        // squares must stay finite too, since Adam's second moment uses g^2
        if !(g * g).is_finite() {
            return Err(Error::Overflow(format!(
                "(beta2/beta1)^t overflows at t = {t}; use fewer steps or AdversarialStream, \
                 which renormalizes the stream"
            )));
        }
        out.push(g);
        g *= ratio;
    }
    Ok(out)
}

/// The same stream generated lazily with periodic renormalization: every
/// `renormalize_every` steps the current value is reset to 1 and the factor
/// applied is reported so a consumer can rescale its history to match.
#[derive(Debug, Clone)]
pub struct AdversarialStream {
    ratio: f64,
    current: f64,
    t: u64,
    renormalize_every: u64,
}

impl AdversarialStream {
    pub const DEFAULT_RENORMALIZE_EVERY: u64 = 500;

    pub fn new(beta1: f64, beta2: f64, g0: f64) -> Result<Self> {
        check_inputs(beta1, beta2, g0)?;
        Ok(Self {
            ratio: beta2 / beta1,
            current: g0,
            t: 0,
            renormalize_every: Self::DEFAULT_RENORMALIZE_EVERY,
        })
    }

    pub fn with_renormalization(mut self, every: u64) -> Result<Self> {
        if every == 0 {
            return Err(Error::Precondition(
                "renormalization period must be >= 1".into(),
            ));
        }
        self.renormalize_every = every;
        Ok(self)
    }
}

impl Iterator for AdversarialStream {
    /// `(g_t, rescale)`; when `rescale` is `Some(c)` every earlier gradient
    /// should be treated as multiplied by `c`.
    type Item = (f64, Option<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        let mut rescale = None;
        if self.t > 0 && self.t.is_multiple_of(self.renormalize_every) {
            let c = 1.0 / self.current;
            self.current = 1.0;
            rescale = Some(c);
        }
        let g = self.current;
        self.current *= self.ratio;
        self.t += 1;
        Some((g, rescale))
    }
}

/// Realized Adam ratios along the adversarial stream together with the
/// step-wise bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialRun {
    pub beta1: f64,
    pub beta2: f64,
    pub steps: usize,
    pub ratios: Vec<f64>,
    pub bounds: Vec<f64>,
    pub sup_ratio: f64,
    pub asymptotic_bound: f64,
}

impl AdversarialRun {
    /// Largest `ratio_t - bound_t`; negative when the bound holds with room.
    pub fn max_violation(&self) -> f64 {
        self.ratios
            .iter()
            .zip(&self.bounds)
            .map(|(r, b)| r - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Feeds the renormalized adversarial stream to Adam with `epsilon = 0` and
/// records `|update|` at every step.
pub fn simulate_adversarial_adam(beta1: f64, beta2: f64, steps: usize) -> Result<AdversarialRun> {
    let asymptotic_bound = adam_ratio_bound(beta1, beta2, None)?;
    let mut adam = Adam::new(1, AdamHyper::exact(beta1, beta2)?)?;
    let mut x = ParamVector::zeros(1);
    let mut ratios = Vec::with_capacity(steps);
    let mut bounds = Vec::with_capacity(steps);
    let stream = AdversarialStream::new(beta1, beta2, 1.0)?;
    for (t, (g, rescale)) in stream.take(steps).enumerate() {
        if let Some(c) = rescale {
            adam.rescale_history(c)?;
        }
        let out = adam.step_with_grad(&mut x, &ParamVector::new(vec![g])?, 0.0)?;
        ratios.push(out.update[0].abs());
        bounds.push(adam_ratio_bound(beta1, beta2, Some(t as u64 + 1))?);
    }
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(AdversarialRun {
        beta1,
        beta2,
        steps,
        ratios,
        bounds,
        sup_ratio,
        asymptotic_bound,
    })
}
