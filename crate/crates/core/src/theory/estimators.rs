use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{l2_distance, ParamVector, RngStream};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessEstimate {
    pub l0: f64,
    pub l1: f64,
    /// Consecutive pairs that entered the fit.
    pub pairs: usize,
}

/// Fits `||grad F(y) - grad F(x)|| / ||y - x|| ~ L0 + L1 ||grad F(x)||` by
/// least squares over consecutive trajectory pairs closer than `radius`.
///
/// Coefficients are clipped at zero by refitting the remaining one. When the
/// gradient norms give no spread (e.g. a single pair) everything is
/// attributed to `L0`.
pub fn estimate_generalized_smoothness(
    problem: &dyn Problem,
    trajectory: &[ParamVector],
    radius: f64,
) -> Result<SmoothnessEstimate> {
    if trajectory.len() < 2 {
        return Err(Error::Degenerate(
            "need at least two trajectory points".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut grad_prev = problem.grad(&trajectory[0])?;
    for w in trajectory.windows(2) {
        let grad_next = problem.grad(&w[1])?;
        let dx = l2_distance(&w[0], &w[1])?;
        if dx > 0.0 && dx <= radius {
            xs.push(grad_prev.norms().l2);
            ys.push(l2_distance(&grad_prev, &grad_next)? / dx);
        }
        grad_prev = grad_next;
    }
    if xs.is_empty() {
        return Err(Error::Degenerate(
            "no consecutive pair with 0 < ||x - y|| <= radius".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();

    let (mut l0, mut l1) = if sxx > 1e-12 * (1.0 + mean_x * mean_x) * n {
        let slope = sxy / sxx;
        (mean_y - slope * mean_x, slope)
    } else {
        (mean_y, 0.0)
    };
    if l1 < 0.0 {
        l0 = mean_y;
        l1 = 0.0;
    }
    if l0 < 0.0 {
        let sx2: f64 = xs.iter().map(|x| x * x).sum();
        l0 = 0.0;
        l1 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / sx2;
    }
    Ok(SmoothnessEstimate {
        l0,
        l1,
        pairs: xs.len(),
    })
}

/// `sqrt(mean ||g_i - mean(g)||^2)` over `samples` stochastic gradients at `x`.
pub fn estimate_noise_sigma(
    problem: &dyn Problem,
    x: &ParamVector,
    samples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let draws = (0..samples)
        .map(|_| problem.stochastic_grad(x, rng))
        .collect::<Result<Vec<_>>>()?;
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for g in &draws {
        for (m, v) in mean.iter_mut().zip(g.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= samples as f64);
    let ss: f64 = draws
        .iter()
        .map(|g| {
            g.iter()
                .zip(&mean)
                .map(|(v, m)| (v - m).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok((ss / samples as f64).sqrt())
}
