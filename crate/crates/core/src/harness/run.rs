use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RngStream};
use crate::theory::adam_ratio_bound;

use super::{detect_spikes, RunConfig, SpikeEvent, StepStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Loss, gradient or parameters stopped being finite (or left the
    /// problem's domain) at `step`; stats cover the steps before it.
    Diverged {
        step: u64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub stats: Vec<StepStats>,
    pub spikes: Vec<SpikeEvent>,
    pub status: RunStatus,
    /// Loss at the last finite iterate.
    pub final_loss: Option<f64>,
    pub final_params: Vec<f64>,
    /// SHA-256 of the little-endian bytes of `final_params`.
    pub final_params_digest: String,
    /// Iterates `x_0 .. x_n` when `telemetry.record_params` is set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trajectory: Option<Vec<Vec<f64>>>,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    /// Largest `max_update` over the run.
    pub fn peak_update(&self) -> f64 {
        self.stats.iter().map(|s| s.max_update).fold(0.0, f64::max)
    }

    /// Steps whose statistics break `min <= mean <= max`, or, for Adam with
    /// epsilon 0, exceed the step-wise ratio bound.
    pub fn telemetry_violations(&self) -> Vec<u64> {
        let betas = self.config.optimizer.adam_bound_betas();
        self.stats
            .iter()
            .filter(|s| {
                let ordered = s.min_update >= 0.0
                    && s.min_update <= s.mean_update
                    && s.mean_update <= s.max_update;
                let bounded = match betas {
                    Some((b1, b2)) => adam_ratio_bound(b1, b2, Some(s.step + 1))
                        .map(|b| s.max_update <= b + 1e-9)
                        .unwrap_or(false),
                    None => true,
                };
                !(ordered && bounded)
            })
            .map(|s| s.step)
            .collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(fs::File::create(path)?);
        for s in &self.stats {
            serde_json::to_writer(&mut f, s)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let summary = serde_json::json!({
            "config": self.config,
            "status": self.status,
            "steps_executed": self.stats.len(),
            "final_loss": self.final_loss,
            "peak_update": self.peak_update(),
            "spikes": self.spikes,
            "final_params_digest": self.final_params_digest,
            "final_params": self.final_params,
        });
        let mut f = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &summary)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    /// `step,loss,mean_update,max_update,min_update,grad_l2,lr` plus the
    /// iterate coordinates when a trajectory was recorded.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(fs::File::create(path)?);
        write!(f, "step,loss,mean_update,max_update,min_update,grad_l2,lr")?;
        let dim = self
            .trajectory
            .as_ref()
            .map_or(0, |_| self.final_params.len());
        for j in 0..dim {
            write!(f, ",x{}", j + 1)?;
        }
        writeln!(f)?;
        for (i, s) in self.stats.iter().enumerate() {
            write!(
                f,
                "{},{},{},{},{},{},{}",
                s.step, s.loss, s.mean_update, s.max_update, s.min_update, s.grad_l2, s.lr
            )?;
            if let Some(tr) = &self.trajectory {
                for v in &tr[i] {
                    write!(f, ",{v}")?;
                }
            }
            writeln!(f)?;
        }
        f.flush()?;
        Ok(())
    }

    /// Writes `<stem>.jsonl`, `<stem>.summary.json` and `<stem>.csv` into
    /// `dir` and returns their paths.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let paths = vec![
            dir.join(format!("{stem}.jsonl")),
            dir.join(format!("{stem}.summary.json")),
            dir.join(format!("{stem}.csv")),
        ];
        self.write_jsonl(&paths[0])?;
        self.write_summary(&paths[1])?;
        self.write_csv(&paths[2])?;
        Ok(paths)
    }
}

pub fn params_digest(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in params {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn clip_global(g: ParamVector, threshold: Option<f64>) -> ParamVector {
    match threshold {
        Some(c) => {
            let n = g.norms().l2;
            if n > c {
                g.scaled(c / n)
            } else {
                g
            }
        }
        None => g,
    }
}

/// Divergence-class errors end the run; anything else is a caller error.
fn is_divergence(e: &Error) -> bool {
    matches!(
        e,
        Error::NonFinite { .. }
            | Error::DivisionByZero { .. }
            | Error::Domain(_)
            | Error::MlpNonFinite { .. }
            | Error::Overflow(_)
    )
}

/// Executes one seeded run. Configuration errors are returned as `Err`;
/// numerical blow-ups end the run with [`RunStatus::Diverged`].
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let problem = config.problem.build()?;
    let mut x = problem.initial_point();
    let mut opt = config.optimizer.build(x.dim())?;
    let mut rng = RngStream::new(config.seed);
    let clip = config.telemetry.grad_clip;
    let mut stats = Vec::with_capacity(config.steps as usize);
    let mut trajectory = config
        .telemetry
        .record_params
        .then(|| vec![x.clone().into_inner()]);
    let mut status = RunStatus::Completed;

    for step in 0..config.steps {
        let lr = config.schedule.lr_at(step)?;
        let loss = match problem.loss(&x) {
            Ok(l) if l.is_finite() => l,
            Ok(l) => {
                status = RunStatus::Diverged {
                    step,
                    reason: format!("loss is {l}"),
                };
                break;
            }
            Err(e) if is_divergence(&e) => {
                status = RunStatus::Diverged {
                    step,
                    reason: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let mut grad_l2 = 0.0;
        let mut grad_at = |p: &ParamVector| -> Result<ParamVector> {
            let g = clip_global(problem.stochastic_grad(p, &mut rng)?, clip);
            grad_l2 = g.norms().l2;
            Ok(g)
        };
        match opt.step(&mut x, &mut grad_at, lr) {
            Ok(out) => {
                stats.push(StepStats::new(step, loss, &out.update, grad_l2, lr));
                if let Some(tr) = trajectory.as_mut() {
                    tr.push(x.clone().into_inner());
                }
            }
            Err(e) if is_divergence(&e) => {
                status = RunStatus::Diverged {
                    step,
                    reason: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let final_loss = match status {
        RunStatus::Completed => problem.loss(&x).ok().filter(|l| l.is_finite()),
        RunStatus::Diverged { .. } => stats.last().map(|s| s.loss),
    };
    let losses: Vec<f64> = stats.iter().map(|s| s.loss).collect();
    let max_updates: Vec<f64> = stats.iter().map(|s| s.max_update).collect();
    let spikes = detect_spikes(
        &losses,
        &max_updates,
        config.telemetry.spike_window,
        config.telemetry.spike_threshold,
    )?;
    let final_params = x.into_inner();
    Ok(RunRecord {
        config: config.clone(),
        stats,
        spikes,
        status,
        final_loss,
        final_params_digest: params_digest(&final_params),
        final_params,
        trajectory,
    })
}
