//! Objectives with hand-written gradients.

mod fig1;
mod mlp;
mod standard;

pub use fig1::Fig1;
pub use mlp::{
    heterogeneity_report, mlp_forward_backward, mlp_loss, write_heterogeneity_csv, Activation,
    Batch, BlobSpec, LayerGradNorm, Mlp, MlpSpec,
};
pub use standard::{standard_problems, Quadratic, Quartic, Rosenbrock};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{finite_diff_gradient, gaussian_noise, ParamVector, RngStream};

/// `F(x) = E[f(x; zeta)]` with an exact gradient and a noisy oracle.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn loss(&self, x: &ParamVector) -> Result<f64>;

    fn grad(&self, x: &ParamVector) -> Result<ParamVector>;

    /// Standard deviation of the additive per-coordinate gradient noise.
    fn noise_sigma(&self) -> f64;

    fn initial_point(&self) -> ParamVector;

    /// A random point where loss and gradient are finite and well scaled,
    /// used by gradient checks.
    fn sample_point(&self, rng: &mut RngStream) -> ParamVector;

    /// `grad(x)` plus iid `Normal(0, noise_sigma)` per coordinate. Draws
    /// nothing from `rng` when the noise is off.
    fn stochastic_grad(&self, x: &ParamVector, rng: &mut RngStream) -> Result<ParamVector> {
        let g = self.grad(x)?;
        let sigma = self.noise_sigma();
        if sigma == 0.0 {
            return Ok(g);
        }
        let noise = gaussian_noise(rng, g.dim(), sigma)?;
        ParamVector::new(g.iter().zip(noise.iter()).map(|(a, b)| a + b).collect())
    }
}

/// Problem selection in run configs, keyed by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Fig1 {
        #[serde(default = "fig1::default_noise")]
        noise_sigma: f64,
    },
    Quadratic {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        noise_sigma: f64,
    },
    Rosenbrock {
        #[serde(default)]
        noise_sigma: f64,
    },
    Quartic {
        #[serde(default = "default_quartic_dim")]
        dim: usize,
        #[serde(default)]
        noise_sigma: f64,
    },
    Mlp(MlpSpec),
}

fn default_kappa() -> f64 {
    100.0
}

fn default_dim() -> usize {
    2
}

fn default_quartic_dim() -> usize {
    1
}

impl ProblemConfig {
    pub fn fig1() -> Self {
        ProblemConfig::Fig1 {
            noise_sigma: fig1::default_noise(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Problem>> {
        Ok(match self {
            ProblemConfig::Fig1 { noise_sigma } => Box::new(Fig1::new(*noise_sigma)?),
            ProblemConfig::Quadratic {
                kappa,
                dim,
                noise_sigma,
            } => Box::new(Quadratic::with_condition(*dim, *kappa, *noise_sigma)?),
            ProblemConfig::Rosenbrock { noise_sigma } => Box::new(Rosenbrock::new(*noise_sigma)?),
            ProblemConfig::Quartic { dim, noise_sigma } => {
                Box::new(Quartic::new(*dim, *noise_sigma)?)
            }
            ProblemConfig::Mlp(spec) => Box::new(Mlp::new(spec.clone())?),
        })
    }
}

/// `||a - b||_2 / max(||a||_2, ||b||_2, 1)`: relative error with a unit floor
/// so vanishing gradients are compared absolutely.
pub fn gradient_mismatch(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    let diff = crate::numerics::l2_distance(a, b)?;
    let scale = a.norms().l2.max(b.norms().l2).max(1.0);
    Ok(diff / scale)
}

/// Worst mismatch between `grad` and central differences over `points`
/// random points.
pub fn max_gradient_mismatch(
    problem: &dyn Problem,
    points: usize,
    h: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = problem.sample_point(rng);
        let analytic = problem.grad(&x)?;
        let numeric = finite_diff_gradient(|p| problem.loss(p), &x, h)?;
        worst = worst.max(gradient_mismatch(&analytic, &numeric)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configs_build_by_name() {
        let cfg: ProblemConfig = serde_json::from_str(r#"{"name":"fig1"}"#).unwrap();
        assert_eq!(cfg, ProblemConfig::fig1());
        let p = cfg.build().unwrap();
        assert_eq!(p.name(), "fig1");
        assert_eq!(p.dim(), 2);

        let cfg: ProblemConfig =
            serde_json::from_str(r#"{"name":"quadratic","kappa":10,"dim":3}"#).unwrap();
        assert_eq!(cfg.build().unwrap().dim(), 3);
        assert!(serde_json::from_str::<ProblemConfig>(r#"{"name":"nope"}"#).is_err());
        assert!(serde_json::from_str::<ProblemConfig>(r#"{"name":"fig1","sigma":1}"#).is_err());
    }

    #[test]
    fn every_analytic_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(99);
        let mut problems = standard_problems();
        problems.push(Box::new(Fig1::new(0.0).unwrap()));
        for p in &problems {
            let err = max_gradient_mismatch(p.as_ref(), 100, 1e-6, &mut rng).unwrap();
            assert!(err <= 1e-6, "{}: {err}", p.name());
        }
    }

    #[test]
    fn noiseless_stochastic_grad_is_exact() {
        let mut rng = RngStream::new(1);
        for p in standard_problems() {
            let x = p.initial_point();
            assert_eq!(
                p.stochastic_grad(&x, &mut rng).unwrap(),
                p.grad(&x).unwrap()
            );
        }
    }

    #[test]
    fn noisy_gradients_are_unbiased() {
        let p = Fig1::new(0.1).unwrap();
        let x = p.initial_point();
        let exact = p.grad(&x).unwrap();
        let mut rng = RngStream::new(8);
        let n = 10_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let g = p.stochastic_grad(&x, &mut rng).unwrap();
            sum[0] += g[0];
            sum[1] += g[1];
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            assert!(
                (mean - exact[j]).abs() <= 3.0 * 0.1 / (n as f64).sqrt(),
                "{j}: {mean}"
            );
        }
    }
}
