use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::ParamVector;
use crate::optim::{Nag, NagVariant, Optimizer};
use crate::problems::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NagReport {
    pub beta: f64,
    pub gamma: f64,
    pub steps: usize,
    /// Largest per-coordinate gap between form II and the shifted form I
    /// iterate `x~_t - gamma * beta * m_{t-1}`.
    pub max_gap_i_ii: f64,
    /// Largest per-coordinate gap between the form II and form III iterates.
    pub max_gap_ii_iii: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn max_abs_gap(a: &ParamVector, b: &ParamVector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the three Nesterov forms side by side from the same start on the
/// exact gradient of `problem` and reports how far the aligned trajectories
/// drift apart.
pub fn nag_equivalence_check(
    problem: &dyn Problem,
    beta: f64,
    gamma: f64,
    steps: usize,
    tolerance: f64,
) -> Result<NagReport> {
    let dim = problem.dim();
    let mut nag1 = Nag::new(dim, NagVariant::I, beta)?;
    let mut nag2 = Nag::new(dim, NagVariant::II, beta)?;
    let mut nag3 = Nag::new(dim, NagVariant::III, beta)?;
    // with m_0 = 0 every form starts at the same point
    let mut x_tilde = problem.initial_point();
    let mut x2 = x_tilde.clone();
    let mut x3 = x_tilde.clone();
    let mut grad = |x: &ParamVector| problem.grad(x);
    let (mut gap12, mut gap23) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        nag1.step(&mut x_tilde, &mut grad, gamma)?;
        nag2.step(&mut x2, &mut grad, gamma)?;
        nag3.step(&mut x3, &mut grad, gamma)?;
        let aligned = nag1.lookahead(&x_tilde, gamma);
        gap12 = gap12.max(max_abs_gap(&aligned, &x2));
        gap23 = gap23.max(max_abs_gap(&x2, &x3));
    }
    Ok(NagReport {
        beta,
        gamma,
        steps,
        max_gap_i_ii: gap12,
        max_gap_ii_iii: gap23,
        tolerance,
        pass: gap12 <= tolerance && gap23 <= tolerance,
    })
}
