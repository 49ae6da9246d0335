//! Theorem check grids behind the `verify` command.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RngStream};
use crate::optim::{Adam, AdamHyper, S3Hyper, S3TwoBeta, S3};
use crate::problems::{Fig1, Problem, Quadratic};

use super::{
    adam_ratio_bound, convergence_bound, nag_equivalence_check, s3_ratio_bound,
    simulate_adversarial_adam, BoundInputs, ConvergenceBudget, StreamFamily,
};

pub const THEOREM_IDS: [&str; 4] = ["t1", "t2", "t3", "t4"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCell {
    pub config: Value,
    /// Largest realized quantity in the cell (ratio, gap or bound value).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<f64>,
    /// Set when the cell's configuration violates a precondition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VerifyCell {
    fn checked(config: Value, value: f64, violation: f64) -> Self {
        Self {
            config,
            value: Some(value),
            violation: Some(violation),
            error: None,
        }
    }

    fn failed(config: Value, err: Error) -> Self {
        Self {
            config,
            value: None,
            violation: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: String,
    pub config_grid: Value,
    /// Largest violation over evaluated cells; `<= 0` means every checked
    /// quantity stayed within its bound.
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub cells: Vec<VerifyCell>,
}

impl VerifyReport {
    fn from_cells(theorem: &str, grid: Value, tolerance: f64, cells: Vec<VerifyCell>) -> Self {
        let evaluated: Vec<f64> = cells.iter().filter_map(|c| c.violation).collect();
        let max_violation = evaluated.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            theorem: theorem.to_string(),
            config_grid: grid,
            max_violation,
            tolerance,
            pass: !evaluated.is_empty() && max_violation <= tolerance,
            cells,
        }
    }
}

/// Adam ratio bound: adversarial stream plus random streams per `(beta1, beta2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T1Grid {
    pub betas: Vec<(f64, f64)>,
    pub adversarial_steps: usize,
    pub random_steps: usize,
    pub dim: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for T1Grid {
    fn default() -> Self {
        Self {
            betas: vec![
                (0.9, 0.999),
                (0.9, 0.99),
                (0.5, 0.9),
                (0.95, 0.999),
                (0.99, 0.999),
            ],
            adversarial_steps: 10_000,
            random_steps: 1000,
            dim: 4,
            seed: 0,
            tolerance: 1e-9,
        }
    }
}

/// Unit bound, two-coefficient bound and denominator monotonicity for S3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T2Grid {
    pub betas: Vec<f64>,
    pub powers: Vec<f64>,
    pub families: Vec<StreamFamily>,
    pub steps: usize,
    pub dim: usize,
    /// Random `(beta1, beta2, p)` triples for the two-coefficient bound.
    pub two_beta_triples: usize,
    pub seed: u64,
    pub unit_tolerance: f64,
    pub tolerance: f64,
}

impl Default for T2Grid {
    fn default() -> Self {
        Self {
            betas: vec![0.5, 0.9, 0.95, 0.99],
            powers: vec![1.0, 2.0, 3.0, 5.0],
            families: StreamFamily::ALL.to_vec(),
            steps: 1000,
            dim: 4,
            two_beta_triples: 200,
            seed: 0,
            unit_tolerance: 1e-12,
            tolerance: 1e-9,
        }
    }
}

/// Nesterov equivalence on deterministic problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T3Grid {
    pub betas: Vec<f64>,
    pub quadratic_gammas: Vec<f64>,
    pub fig1_gammas: Vec<f64>,
    pub steps: usize,
    pub tolerance: f64,
}

impl Default for T3Grid {
    fn default() -> Self {
        Self {
            betas: vec![0.0, 0.5, 0.9, 0.99],
            quadratic_gammas: vec![0.1, 0.01],
            fig1_gammas: vec![1e-3, 1e-4],
            steps: 1000,
            tolerance: 1e-9,
        }
    }
}

/// Convergence bound arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T4Grid {
    pub steps: Vec<u64>,
    pub base: ConvergenceBudget,
    /// Known value of the bound for `base` at `steps[0]`, if any.
    pub expected_first: Option<f64>,
    pub tolerance: f64,
}

impl Default for T4Grid {
    fn default() -> Self {
        Self {
            steps: vec![16, 256, 4096, 65_536],
            base: ConvergenceBudget::unit(16),
            expected_first: Some(4.8828125),
            tolerance: 0.0,
        }
    }
}

fn max_abs(v: &ParamVector) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn verify_t1(grid: &T1Grid) -> Result<VerifyReport> {
    let mut cells = Vec::new();
    let mut rng = RngStream::new(grid.seed);
    for &(b1, b2) in &grid.betas {
        let config = json!({"beta1": b1, "beta2": b2, "stream": "adversarial", "steps": grid.adversarial_steps});
        match simulate_adversarial_adam(b1, b2, grid.adversarial_steps) {
            Ok(run) => {
                let violation = run.max_violation();
                cells.push(VerifyCell::checked(config, run.sup_ratio, violation));
            }
            Err(e) => cells.push(VerifyCell::failed(config, e)),
        }
        for family in StreamFamily::ALL.iter().filter(|f| !f.may_contain_zeros()) {
            let config =
                json!({"beta1": b1, "beta2": b2, "stream": family, "steps": grid.random_steps});
            let outcome = (|| -> Result<(f64, f64)> {
                let hyper = AdamHyper::exact(b1, b2)?;
                adam_ratio_bound(b1, b2, None)?;
                let mut adam = Adam::new(grid.dim, hyper)?;
                let mut x = ParamVector::zeros(grid.dim);
                let (mut sup, mut worst) = (0.0f64, f64::NEG_INFINITY);
                for (t, g) in family
                    .generate(grid.dim, grid.random_steps, &mut rng)
                    .iter()
                    .enumerate()
                {
                    let out = adam.step_with_grad(&mut x, g, 0.0)?;
                    let r = max_abs(&out.update);
                    let bound = adam_ratio_bound(b1, b2, Some(t as u64 + 1))?;
                    sup = sup.max(r);
                    worst = worst.max(r - bound);
                }
                Ok((sup, worst))
            })();
            match outcome {
                Ok((sup, worst)) => cells.push(VerifyCell::checked(config, sup, worst)),
                Err(e) => cells.push(VerifyCell::failed(config, e)),
            }
        }
    }
    let grid_json = serde_json::to_value(grid)?;
    Ok(VerifyReport::from_cells(
        "t1",
        grid_json,
        grid.tolerance,
        cells,
    ))
}

/// Largest `|u| - 1` for single-coefficient S3 on one stream.
pub fn s3_unit_violation(hyper: S3Hyper, stream: &[ParamVector]) -> Result<f64> {
    let dim = stream.first().map(|g| g.dim()).unwrap_or(1);
    let mut s3 = S3::new(dim, hyper)?;
    let mut x = ParamVector::zeros(dim);
    let mut worst = f64::NEG_INFINITY;
    for g in stream {
        let out = s3.step_with_grad(&mut x, g, 0.0)?;
        worst = worst.max(max_abs(&out.update) - 1.0);
    }
    Ok(worst)
}

/// Largest `|n/b| - bound` for the two-coefficient S3 on one stream.
pub fn s3_two_beta_violation(inputs: &BoundInputs, stream: &[ParamVector]) -> Result<f64> {
    let bound = s3_ratio_bound(inputs)?;
    let dim = stream.first().map(|g| g.dim()).unwrap_or(1);
    let mut opt = S3TwoBeta::new(dim, inputs.beta1, inputs.beta2, inputs.p)?;
    let mut worst = f64::NEG_INFINITY;
    for g in stream {
        let out = opt.observe(g)?;
        worst = worst.max(max_abs(&out.update) - bound);
    }
    Ok(worst)
}

/// Largest `b_t(p_lo) - b_t(p_hi)` over steps and coordinates (should be `<= 0`).
pub fn denominator_monotonicity_violation(
    beta: f64,
    p_lo: f64,
    p_hi: f64,
    stream: &[ParamVector],
) -> Result<f64> {
    let dim = stream.first().map(|g| g.dim()).unwrap_or(1);
    let mut lo = S3::new(dim, S3Hyper::new(beta, p_lo)?)?;
    let mut hi = S3::new(dim, S3Hyper::new(beta, p_hi)?)?;
    let mut x = ParamVector::zeros(dim);
    let mut worst = f64::NEG_INFINITY;
    for g in stream {
        let a = lo.step_with_grad(&mut x, g, 0.0)?;
        let b = hi.step_with_grad(&mut x, g, 0.0)?;
        for (u, v) in a.denominator.iter().zip(b.denominator.iter()) {
            // relative slack for rounding in the p-th roots
            worst = worst.max((u - v) / v.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

pub fn verify_t2(grid: &T2Grid) -> Result<VerifyReport> {
    let mut cells = Vec::new();
    let mut rng = RngStream::new(grid.seed);
    // unit bound, reported against its own tolerance by shifting
    let shift = grid.tolerance - grid.unit_tolerance;
    for &family in &grid.families {
        let stream = family.generate(grid.dim, grid.steps, &mut rng);
        for &beta in &grid.betas {
            for &p in &grid.powers {
                let config = json!({"check": "unit", "stream": family, "beta": beta, "p": p});
                match S3Hyper::new(beta, p).and_then(|h| s3_unit_violation(h, &stream)) {
                    Ok(v) => cells.push(VerifyCell::checked(config, 1.0 + v, v + shift)),
                    Err(e) => cells.push(VerifyCell::failed(config, e)),
                }
            }
            let mut powers = grid.powers.clone();
            powers.sort_by(f64::total_cmp);
            for w in powers.windows(2) {
                let config = json!({"check": "monotone", "stream": family, "beta": beta, "p_lo": w[0], "p_hi": w[1]});
                match denominator_monotonicity_violation(beta, w[0], w[1], &stream) {
                    Ok(v) => cells.push(VerifyCell::checked(config, v, v)),
                    Err(e) => cells.push(VerifyCell::failed(config, e)),
                }
            }
        }
    }
    for _ in 0..grid.two_beta_triples {
        let p = 1.0 + rng.uniform(0.0, 4.0);
        let beta2 = rng.uniform(0.5, 0.999);
        let beta1 = rng.uniform(0.0, beta2.powf(1.0 / p));
        let family = grid.families[rng.below(grid.families.len())];
        let stream = family.generate(grid.dim, grid.steps, &mut rng);
        let config =
            json!({"check": "two_beta", "stream": family, "beta1": beta1, "beta2": beta2, "p": p});
        match BoundInputs::new(beta1, beta2, p).and_then(|b| s3_two_beta_violation(&b, &stream)) {
            Ok(v) => cells.push(VerifyCell::checked(config, v, v)),
            Err(e) => cells.push(VerifyCell::failed(config, e)),
        }
    }
    let grid_json = serde_json::to_value(grid)?;
    Ok(VerifyReport::from_cells(
        "t2",
        grid_json,
        grid.tolerance,
        cells,
    ))
}

pub fn verify_t3(grid: &T3Grid) -> Result<VerifyReport> {
    let quadratic = Quadratic::with_condition(4, 100.0, 0.0)?;
    let fig1 = Fig1::new(0.0)?;
    let problems: [(&dyn Problem, &Vec<f64>); 2] = [
        (&quadratic, &grid.quadratic_gammas),
        (&fig1, &grid.fig1_gammas),
    ];
    let mut cells = Vec::new();
    for (problem, gammas) in problems {
        for &beta in &grid.betas {
            for &gamma in gammas {
                let config = json!({"problem": problem.name(), "beta": beta, "gamma": gamma, "steps": grid.steps});
                match nag_equivalence_check(problem, beta, gamma, grid.steps, grid.tolerance) {
                    Ok(r) => {
                        let gap = r.max_gap_i_ii.max(r.max_gap_ii_iii);
                        cells.push(VerifyCell::checked(config, gap, gap));
                    }
                    Err(e) => cells.push(VerifyCell::failed(config, e)),
                }
            }
        }
    }
    let grid_json = serde_json::to_value(grid)?;
    Ok(VerifyReport::from_cells(
        "t3",
        grid_json,
        grid.tolerance,
        cells,
    ))
}

/// Violations are positive when the bound fails to decrease in `T`, fails to
/// grow in a constant, or misses the expected value.
pub fn verify_t4(grid: &T4Grid) -> Result<VerifyReport> {
    let mut cells = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, &t) in grid.steps.iter().enumerate() {
        let budget = ConvergenceBudget {
            steps: t,
            ..grid.base
        };
        let config = json!({"check": "decreasing_in_T", "T": t});
        match convergence_bound(&budget) {
            Ok(r) => {
                let mut violation = prev.map_or(f64::NEG_INFINITY, |p| r.bound - p);
                if i == 0 {
                    if let Some(want) = grid.expected_first {
                        violation = violation.max((r.bound - want).abs());
                    }
                }
                prev = Some(r.bound);
                cells.push(VerifyCell::checked(config, r.bound, violation));
            }
            Err(e) => cells.push(VerifyCell::failed(config, e)),
        }
    }
    let t = grid.steps.first().copied().unwrap_or(16);
    let base = ConvergenceBudget {
        steps: t,
        ..grid.base
    };
    let bumps: [(&str, ConvergenceBudget); 5] = [
        (
            "l0",
            ConvergenceBudget {
                l0: 2.0 * base.l0,
                ..base
            },
        ),
        (
            "sigma",
            ConvergenceBudget {
                sigma: 2.0 * base.sigma + 1.0,
                ..base
            },
        ),
        (
            "d",
            ConvergenceBudget {
                d: 2 * base.d,
                ..base
            },
        ),
        (
            "u_max",
            ConvergenceBudget {
                u_max: 2.0 * base.u_max,
                ..base
            },
        ),
        (
            "f_gap",
            ConvergenceBudget {
                f_gap: 2.0 * base.f_gap + 1.0,
                ..base
            },
        ),
    ];
    for (name, bumped) in bumps {
        let config = json!({"check": "increasing_in", "constant": name, "T": t});
        match (convergence_bound(&base), convergence_bound(&bumped)) {
            (Ok(a), Ok(b)) => {
                // a strict increase is required, so equality counts as a violation
                let violation = if b.bound > a.bound {
                    a.bound - b.bound
                } else {
                    1.0
                };
                cells.push(VerifyCell::checked(config, b.bound, violation));
            }
            (Err(e), _) | (_, Err(e)) => cells.push(VerifyCell::failed(config, e)),
        }
    }
    let grid_json = serde_json::to_value(grid)?;
    Ok(VerifyReport::from_cells(
        "t4",
        grid_json,
        grid.tolerance,
        cells,
    ))
}

fn parse<T: Default + for<'de> Deserialize<'de>>(grid: Option<Value>) -> Result<T> {
    match grid {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| Error::Config(e.to_string())),
    }
}

fn unknown_id(id: &str) -> Error {
    Error::Config(format!(
        "unknown theorem id {id:?}; valid ids are {}",
        THEOREM_IDS.join(", ")
    ))
}

/// The grid for `id` with every field present, defaults filled in.
pub fn resolve_grid(id: &str, grid: Option<Value>) -> Result<Value> {
    Ok(match id {
        "t1" => serde_json::to_value(parse::<T1Grid>(grid)?)?,
        "t2" => serde_json::to_value(parse::<T2Grid>(grid)?)?,
        "t3" => serde_json::to_value(parse::<T3Grid>(grid)?)?,
        "t4" => serde_json::to_value(parse::<T4Grid>(grid)?)?,
        other => return Err(unknown_id(other)),
    })
}

/// Runs the named check with its grid given as JSON (`None` for the default).
pub fn verify_theorem(id: &str, grid: Option<Value>) -> Result<VerifyReport> {
    match id {
        "t1" => verify_t1(&parse(grid)?),
        "t2" => verify_t2(&parse(grid)?),
        "t3" => verify_t3(&parse(grid)?),
        "t4" => verify_t4(&parse(grid)?),
        other => Err(unknown_id(other)),
    }
}
