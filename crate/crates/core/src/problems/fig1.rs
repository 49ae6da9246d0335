use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RngStream};

use super::Problem;

pub(crate) fn default_noise() -> f64 {
    0.1
}

/// Two-dimensional toy loss
/// `f(x1, x2) = 0.5 (x1 - 1/x2)^2 + 0.5 (x1 - 20 x2)^2`
/// started at `(1, 1)`.
///
/// The two partial derivatives differ by more than an order of magnitude at
/// the start, which is what separates SGD from sign-like methods. The
/// minimum sits on `x1 = 1/x2 = 20 x2`, i.e. `(sqrt(20), 1/sqrt(20))`.
///
/// The domain is the half-plane `x2 > 0` holding the start point; reaching
/// `x2 <= 0` means the trajectory crossed the pole of `1/x2` and is reported
/// as a domain error.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig1 {
    noise_sigma: f64,
}

impl Fig1 {
    pub fn new(noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidHyper {
                name: "noise_sigma",
                value: noise_sigma,
                reason: "must be finite and >= 0",
            });
        }
        Ok(Self { noise_sigma })
    }

    pub fn minimizer() -> ParamVector {
        let r = 20f64.sqrt();
        ParamVector::new(vec![r, 1.0 / r]).expect("two coordinates")
    }

    fn residuals(x: &ParamVector) -> Result<(f64, f64, f64, f64)> {
        if x.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: x.dim(),
            });
        }
        let (x1, x2) = (x[0], x[1]);
        if !(x2 > 0.0) {
            return Err(Error::Domain(format!(
                "x2 = {x2} is on or beyond the pole of 1/x2 at x2 = 0"
            )));
        }
        Ok((x1, x2, x1 - 1.0 / x2, x1 - 20.0 * x2))
    }
}

impl Problem for Fig1 {
    fn name(&self) -> &str {
        "fig1"
    }

    fn dim(&self) -> usize {
        2
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        let (_, _, a, b) = Self::residuals(x)?;
        Ok(0.5 * a * a + 0.5 * b * b)
    }

    fn grad(&self, x: &ParamVector) -> Result<ParamVector> {
        let (_, x2, a, b) = Self::residuals(x)?;
        ParamVector::new(vec![a + b, a / (x2 * x2) - 20.0 * b])
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn initial_point(&self) -> ParamVector {
        ParamVector::new(vec![1.0, 1.0]).expect("two coordinates")
    }

    fn sample_point(&self, rng: &mut RngStream) -> ParamVector {
        ParamVector::new(vec![rng.uniform(-5.0, 5.0), rng.uniform(0.2, 3.0)])
            .expect("two coordinates")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_gradient;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    #[test]
    fn loss_and_gradient_at_start() {
        let p = Fig1::new(0.1).unwrap();
        let x = p.initial_point();
        assert_eq!(p.loss(&x).unwrap(), 180.5);
        assert_eq!(p.grad(&x).unwrap(), pv(&[-19.0, 380.0]));
        let fd = finite_diff_gradient(|y| p.loss(y), &x, 1e-6).unwrap();
        assert!(
            (fd[0] + 19.0).abs() < 1e-4 && (fd[1] - 380.0).abs() < 1e-4,
            "{fd:?}"
        );
    }

    #[test]
    fn minimum_is_zero() {
        let p = Fig1::new(0.0).unwrap();
        let x = Fig1::minimizer();
        assert!(p.loss(&x).unwrap() < 1e-28);
        assert!(p.grad(&x).unwrap().norms().l2 < 1e-12);
    }

    #[test]
    fn pole_is_a_domain_error() {
        let p = Fig1::new(0.0).unwrap();
        assert!(matches!(p.loss(&pv(&[1.0, 0.0])), Err(Error::Domain(_))));
        assert!(matches!(p.grad(&pv(&[1.0, -0.5])), Err(Error::Domain(_))));
    }
}
