//! Built-in reproduction of the two-dimensional toy comparison: SGD,
//! SignSGD, Adam and S3 from `(1, 1)` with noisy gradients.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problems::ProblemConfig;

use super::{run, OptimizerConfig, RunConfig, RunRecord, Schedule, TelemetryConfig};

pub const FIG1_STEPS: u64 = 10_000;
/// Shared by SignSGD, Adam and S3.
pub const FIG1_LR: f64 = 3e-3;
/// Candidates for SGD, tried from the largest down.
pub const SGD_LR_CANDIDATES: [f64; 8] = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 5e-5];

/// Largest candidate learning rate at which plain SGD neither diverges nor
/// ends above its starting loss on the noiseless toy problem.
pub fn search_sgd_lr(steps: u64) -> Result<f64> {
    for &lr in &SGD_LR_CANDIDATES {
        let cfg = RunConfig {
            problem: ProblemConfig::Fig1 { noise_sigma: 0.0 },
            optimizer: OptimizerConfig::Sgdm { momentum: 0.0 },
            schedule: Schedule::constant(lr, steps),
            seed: 0,
            steps,
            telemetry: TelemetryConfig::default(),
        };
        let rec = run(&cfg)?;
        let start = rec.stats.first().map(|s| s.loss).unwrap_or(f64::INFINITY);
        if !rec.diverged() && rec.final_loss.is_some_and(|l| l < start) {
            return Ok(lr);
        }
    }
    Ok(*SGD_LR_CANDIDATES.last().expect("nonempty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Setup {
    pub seed: u64,
    pub steps: u64,
    pub noise_sigma: f64,
    pub sgd_lr: f64,
    pub runs: Vec<(String, RunConfig)>,
}

fn config(optimizer: OptimizerConfig, lr: f64, seed: u64, steps: u64, sigma: f64) -> RunConfig {
    RunConfig {
        problem: ProblemConfig::Fig1 { noise_sigma: sigma },
        optimizer,
        schedule: Schedule::constant(lr, steps),
        seed,
        steps,
        telemetry: TelemetryConfig {
            record_params: true,
            ..TelemetryConfig::default()
        },
    }
}

/// The four run configs. Every optimizer sees the same seed, hence the same
/// noise draws for as long as its gradient calls line up.
pub fn fig1_setup(seed: u64, steps: u64) -> Result<Fig1Setup> {
    let sigma = 0.1;
    let sgd_lr = search_sgd_lr(steps)?;
    let runs = vec![
        (
            "sgd".to_string(),
            config(
                OptimizerConfig::Sgdm { momentum: 0.0 },
                sgd_lr,
                seed,
                steps,
                sigma,
            ),
        ),
        (
            "signsgd".to_string(),
            config(OptimizerConfig::Signsgd {}, FIG1_LR, seed, steps, sigma),
        ),
        (
            "adam".to_string(),
            config(
                OptimizerConfig::Adam {
                    beta1: 0.9,
                    beta2: 0.999,
                    epsilon: 1e-8,
                    weight_decay: 0.0,
                    update_clip: None,
                },
                FIG1_LR,
                seed,
                steps,
                sigma,
            ),
        ),
        (
            "s3".to_string(),
            config(OptimizerConfig::s3(0.95, 3.0), FIG1_LR, seed, steps, sigma),
        ),
    ];
    Ok(Fig1Setup {
        seed,
        steps,
        noise_sigma: sigma,
        sgd_lr,
        runs,
    })
}

/// `step,x1,x2,loss,mean_update`; `x1, x2` is the iterate the loss was
/// measured at.
pub fn write_trajectory_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "step,x1,x2,loss,mean_update")?;
    let traj = record.trajectory.as_deref().unwrap_or(&[]);
    for (s, x) in record.stats.iter().zip(traj) {
        writeln!(
            f,
            "{},{},{},{},{}",
            s.step, x[0], x[1], s.loss, s.mean_update
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Runs the four optimizers and writes one CSV each plus
/// `fig1_config.json`. Returns the records with the written paths.
pub fn write_fig1(out_dir: &Path, seed: u64, steps: u64) -> Result<(Vec<RunRecord>, Vec<PathBuf>)> {
    fs::create_dir_all(out_dir)?;
    let setup = fig1_setup(seed, steps)?;
    let mut records = Vec::new();
    let mut paths = Vec::new();
    for (label, cfg) in &setup.runs {
        let rec = run(cfg)?;
        let path = out_dir.join(format!("fig1_{label}.csv"));
        write_trajectory_csv(&rec, &path)?;
        paths.push(path);
        records.push(rec);
    }
    let sidecar = out_dir.join("fig1_config.json");
    let mut f = BufWriter::new(fs::File::create(&sidecar)?);
    serde_json::to_writer_pretty(&mut f, &setup)?;
    f.write_all(b"\n")?;
    f.flush()?;
    paths.push(sidecar);
    Ok((records, paths))
}
