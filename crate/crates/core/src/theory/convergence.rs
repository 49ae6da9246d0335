use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants entering the nonconvex convergence bound for S3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceBudget {
    pub l0: f64,
    pub l1: f64,
    /// Locality radius of the smoothness condition; not used by the bound.
    pub r: f64,
    pub sigma: f64,
    /// `F(x_1) - F*`.
    pub f_gap: f64,
    /// `||grad F(x_1)||_2`.
    pub grad1_norm: f64,
    pub d: u64,
    pub u_max: f64,
    /// Number of iterations `T`.
    pub steps: u64,
}

impl ConvergenceBudget {
    /// All constants 1, as in the hand-worked example.
    pub fn unit(steps: u64) -> Self {
        Self {
            l0: 1.0,
            l1: 0.0,
            r: 1.0,
            sigma: 1.0,
            f_gap: 1.0,
            grad1_norm: 1.0,
            d: 1,
            u_max: 1.0,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Precondition("T must be >= 1".into()));
        }
        if self.d == 0 {
            return Err(Error::Precondition("d must be >= 1".into()));
        }
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return Err(Error::InvalidHyper {
                name: "l0",
                value: self.l0,
                reason: "must be finite and > 0 for the prescribed step size",
            });
        }
        for (name, v) in [
            ("l1", self.l1),
            ("r", self.r),
            ("sigma", self.sigma),
            ("f_gap", self.f_gap),
            ("grad1_norm", self.grad1_norm),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidHyper {
                    name,
                    value: v,
                    reason: "must be finite and >= 0",
                });
            }
        }
        if !(self.u_max >= 1.0) || !self.u_max.is_finite() {
            return Err(Error::InvalidHyper {
                name: "u_max",
                value: self.u_max,
                reason: "must be finite and >= 1",
            });
        }
        Ok(())
    }

    /// `1 - 1/sqrt(T)`.
    pub fn beta(&self) -> f64 {
        1.0 - 1.0 / (self.steps as f64).sqrt()
    }

    /// `1 / (L0 T^(3/4))`.
    pub fn gamma(&self) -> f64 {
        1.0 / (self.l0 * (self.steps as f64).powf(0.75))
    }

    /// Smallest `T` the proof covers:
    /// `max{(2 d L1 / (L0 u_min))^(4/3), (8 beta^2 sqrt(d) L1 / ((1-beta) L0 u_min))^4}`
    /// with `u_min = 1/U_max` and `beta` taken at the current `T`.
    pub fn regime_threshold(&self) -> f64 {
        let u_min = 1.0 / self.u_max;
        let d = self.d as f64;
        let beta = self.beta();
        let a = (2.0 * d * self.l1 / (self.l0 * u_min)).powf(4.0 / 3.0);
        let b = if self.l1 == 0.0 {
            0.0
        } else {
            (8.0 * beta * beta * d.sqrt() * self.l1 / ((1.0 - beta) * self.l0 * u_min)).powi(4)
        };
        a.max(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub bound: f64,
    pub terms: [f64; 5],
    pub beta: f64,
    pub gamma: f64,
    pub regime_threshold: f64,
    /// False means the bound was evaluated outside the theorem regime.
    pub in_theorem_regime: bool,
}

/// Right-hand side of the averaged `l1` gradient-norm bound:
/// ```text
/// 2 L0 U (F(x1) - F*) / T^(1/4)  +  4 beta U sqrt(d) ||grad F(x1)|| / T^(1/2)
///   + 4 U sqrt(d) sigma / T^(1/4)  +  4 beta^2 U d / T^(1/4)  +  U d / T^(7/4)
/// ```
pub fn convergence_bound(budget: &ConvergenceBudget) -> Result<ConvergenceReport> {
    budget.validate()?;
    let t = budget.steps as f64;
    let u = budget.u_max;
    let d = budget.d as f64;
    let beta = budget.beta();
    let t14 = t.powf(0.25);
    let terms = [
        2.0 * budget.l0 * u * budget.f_gap / t14,
        4.0 * beta * u * d.sqrt() * budget.grad1_norm / t.sqrt(),
        4.0 * u * d.sqrt() * budget.sigma / t14,
        4.0 * beta * beta * u * d / t14,
        u * d / t.powf(1.75),
    ];
    let threshold = budget.regime_threshold();
    Ok(ConvergenceReport {
        bound: terms.iter().sum(),
        terms,
        beta,
        gamma: budget.gamma(),
        regime_threshold: threshold,
        in_theorem_regime: t >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_budget_at_sixteen() {
        let r = convergence_bound(&ConvergenceBudget::unit(16)).unwrap();
        assert_eq!(r.beta, 0.75);
        assert_eq!(r.terms, [1.0, 0.75, 2.0, 1.125, 0.0078125]);
        assert_eq!(r.bound, 4.8828125);
        assert_eq!(r.gamma, 0.125);
        assert!(r.in_theorem_regime);
    }

    #[test]
    fn zero_steps_is_an_error() {
        assert!(convergence_bound(&ConvergenceBudget::unit(0)).is_err());
    }

    #[test]
    fn doubling_u_max_doubles_the_bound() {
        let a = convergence_bound(&ConvergenceBudget::unit(256))
            .unwrap()
            .bound;
        let mut b = ConvergenceBudget::unit(256);
        b.u_max = 2.0;
        assert_eq!(convergence_bound(&b).unwrap().bound, 2.0 * a);
    }

    #[test]
    fn large_smoothness_leaves_the_regime() {
        let mut b = ConvergenceBudget::unit(16);
        b.l1 = 10.0;
        let r = convergence_bound(&b).unwrap();
        assert!(!r.in_theorem_regime);
        assert!(r.bound.is_finite());
    }
}
