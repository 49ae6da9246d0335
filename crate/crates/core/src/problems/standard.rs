use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RngStream};

use super::Problem;

fn check_noise(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name: "noise_sigma",
            value: sigma,
            reason: "must be finite and >= 0",
        })
    }
}

fn check_dim(dim: usize, x: &ParamVector) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Separable quadratic `0.5 * sum(lambda_i x_i^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    lambdas: Vec<f64>,
    noise_sigma: f64,
}

impl Quadratic {
    pub fn new(lambdas: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        check_noise(noise_sigma)?;
        if lambdas.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(&l) = lambdas.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidHyper {
                name: "lambda",
                value: l,
                reason: "curvatures must be finite and > 0",
            });
        }
        Ok(Self {
            lambdas,
            noise_sigma,
        })
    }

    /// Curvatures spaced geometrically from 1 to `kappa`.
    pub fn with_condition(dim: usize, kappa: f64, noise_sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidHyper {
                name: "kappa",
                value: kappa,
                reason: "condition number must be finite and >= 1",
            });
        }
        let lambdas = (0..dim)
            .map(|i| {
                if dim == 1 {
                    1.0
                } else {
                    kappa.powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        Self::new(lambdas, noise_sigma)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(0.5
            * x.iter()
                .zip(&self.lambdas)
                .map(|(v, l)| l * v * v)
                .sum::<f64>())
    }

    fn grad(&self, x: &ParamVector) -> Result<ParamVector> {
        check_dim(self.dim(), x)?;
        ParamVector::new(x.iter().zip(&self.lambdas).map(|(v, l)| l * v).collect())
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn initial_point(&self) -> ParamVector {
        ParamVector::filled(self.dim(), 1.0)
    }

    fn sample_point(&self, rng: &mut RngStream) -> ParamVector {
        ParamVector::new((0..self.dim()).map(|_| rng.uniform(-3.0, 3.0)).collect())
            .expect("nonempty")
    }
}

/// `(1 - x)^2 + 100 (y - x^2)^2`, minimum at `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rosenbrock {
    noise_sigma: f64,
}

impl Rosenbrock {
    pub fn new(noise_sigma: f64) -> Result<Self> {
        check_noise(noise_sigma)?;
        Ok(Self { noise_sigma })
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        2
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(2, x)?;
        let (a, b) = (x[0], x[1]);
        Ok((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
    }

    fn grad(&self, x: &ParamVector) -> Result<ParamVector> {
        check_dim(2, x)?;
        let (a, b) = (x[0], x[1]);
        ParamVector::new(vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ])
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn initial_point(&self) -> ParamVector {
        ParamVector::new(vec![-1.2, 1.0]).expect("two coordinates")
    }

    fn sample_point(&self, rng: &mut RngStream) -> ParamVector {
        ParamVector::new(vec![rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 3.0)])
            .expect("two coordinates")
    }
}

/// `sum(x_i^4)`: curvature `12 x^2` grows with the gradient `4 x^3`, the
/// fixture for estimating generalized smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct Quartic {
    dim: usize,
    noise_sigma: f64,
}

impl Quartic {
    pub fn new(dim: usize, noise_sigma: f64) -> Result<Self> {
        check_noise(noise_sigma)?;
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self { dim, noise_sigma })
    }
}

impl Problem for Quartic {
    fn name(&self) -> &str {
        "quartic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(x.iter().map(|v| v.powi(4)).sum())
    }

    fn grad(&self, x: &ParamVector) -> Result<ParamVector> {
        check_dim(self.dim, x)?;
        Ok(x.map(|v| 4.0 * v.powi(3)))
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn initial_point(&self) -> ParamVector {
        ParamVector::filled(self.dim, 1.0)
    }

    fn sample_point(&self, rng: &mut RngStream) -> ParamVector {
        ParamVector::new((0..self.dim).map(|_| rng.uniform(-2.0, 2.0)).collect()).expect("nonempty")
    }
}

/// Noiseless fixtures: quadratic with condition number 100, Rosenbrock-2D
/// and the one-dimensional quartic.
pub fn standard_problems() -> Vec<Box<dyn Problem>> {
    vec![
        Box::new(Quadratic::with_condition(2, 100.0, 0.0).expect("valid")),
        Box::new(Rosenbrock::new(0.0).expect("valid")),
        Box::new(Quartic::new(1, 0.0).expect("valid")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    #[test]
    fn fixture_values() {
        let q = Quadratic::with_condition(2, 100.0, 0.0).unwrap();
        assert_eq!(q.lambdas(), &[1.0, 100.0]);
        assert_eq!(q.grad(&pv(&[1.0, 1.0])).unwrap(), pv(&[1.0, 100.0]));

        let r = Rosenbrock::new(0.0).unwrap();
        assert_eq!(r.grad(&pv(&[1.0, 1.0])).unwrap(), pv(&[0.0, 0.0]));
        assert_eq!(r.loss(&pv(&[1.0, 1.0])).unwrap(), 0.0);

        let f = Quartic::new(1, 0.0).unwrap();
        assert_eq!(f.grad(&pv(&[2.0])).unwrap(), pv(&[32.0]));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let r = Rosenbrock::new(0.0).unwrap();
        assert!(r.loss(&pv(&[1.0])).is_err());
        assert!(Quadratic::new(vec![1.0, -1.0], 0.0).is_err());
    }
}
