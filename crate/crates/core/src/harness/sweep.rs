use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemConfig;

use super::{run, OptimizerConfig, RunConfig, RunRecord, RunStatus, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepVariant {
    pub label: String,
    pub optimizer: OptimizerConfig,
    /// Replaces the base schedule for this variant.
    #[serde(default)]
    pub schedule: Option<Schedule>,
}

/// Every variant is run once per seed on top of `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub variants: Vec<SweepVariant>,
    pub seeds: Vec<u64>,
    /// Also use the seed for the MLP dataset and initial weights, so seeds
    /// differ in more than the minibatch order.
    #[serde(default)]
    pub reseed_problem: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one variant and one seed".into(),
            ));
        }
        for cfg in self.expand() {
            cfg.1.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: SweepConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(variant index, run config)` for every variant and seed.
    pub fn expand(&self) -> Vec<(usize, RunConfig)> {
        let mut out = Vec::new();
        for (i, v) in self.variants.iter().enumerate() {
            for &seed in &self.seeds {
                let mut cfg = self.base.clone();
                cfg.optimizer = v.optimizer.clone();
                if let Some(s) = v.schedule {
                    cfg.schedule = s;
                }
                cfg.seed = seed;
                if self.reseed_problem {
                    if let ProblemConfig::Mlp(spec) = &mut cfg.problem {
                        spec.init_seed = seed;
                        spec.dataset.seed = seed;
                    }
                }
                out.push((i, cfg));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub label: String,
    pub seed: u64,
    pub status: RunStatus,
    pub final_loss: Option<f64>,
    pub spike_count: usize,
    pub peak_update: f64,
    pub final_params_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub label: String,
    pub runs: usize,
    pub diverged: usize,
    /// Runs with at least one spike event or a divergence.
    pub unstable: usize,
    pub total_spikes: usize,
    pub median_final_loss: Option<f64>,
}

/// Per-seed comparison of the first two variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadToHead {
    pub first: String,
    pub second: String,
    /// Seeds where `first` ended at a final loss no larger than `second`
    /// (a diverged run loses to any finished one).
    pub first_wins: usize,
    pub seeds: usize,
    pub win_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub variants: Vec<VariantSummary>,
    pub head_to_head: Option<HeadToHead>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn effective_loss(r: &SweepRun) -> f64 {
    match (&r.status, r.final_loss) {
        (RunStatus::Completed, Some(l)) => l,
        _ => f64::INFINITY,
    }
}

impl SweepReport {
    pub fn from_records(cfg: &SweepConfig, records: &[(usize, RunRecord)]) -> Self {
        let runs: Vec<SweepRun> = records
            .iter()
            .map(|(i, r)| SweepRun {
                label: cfg.variants[*i].label.clone(),
                seed: r.config.seed,
                status: r.status.clone(),
                final_loss: r.final_loss,
                spike_count: r.spikes.len(),
                peak_update: r.peak_update(),
                final_params_digest: r.final_params_digest.clone(),
            })
            .collect();
        let variants = cfg
            .variants
            .iter()
            .map(|v| {
                let mine: Vec<&SweepRun> = runs.iter().filter(|r| r.label == v.label).collect();
                let mut losses: Vec<f64> = mine
                    .iter()
                    .filter(|r| r.status == RunStatus::Completed)
                    .filter_map(|r| r.final_loss)
                    .collect();
                VariantSummary {
                    label: v.label.clone(),
                    runs: mine.len(),
                    diverged: mine
                        .iter()
                        .filter(|r| r.status != RunStatus::Completed)
                        .count(),
                    unstable: mine
                        .iter()
                        .filter(|r| r.status != RunStatus::Completed || r.spike_count > 0)
                        .count(),
                    total_spikes: mine.iter().map(|r| r.spike_count).sum(),
                    median_final_loss: median(&mut losses),
                }
            })
            .collect();
        let head_to_head = (cfg.variants.len() >= 2).then(|| {
            let (a, b) = (&cfg.variants[0].label, &cfg.variants[1].label);
            let mut wins = 0;
            for &seed in &cfg.seeds {
                let find =
                    |label: &String| runs.iter().find(|r| &r.label == label && r.seed == seed);
                if let (Some(ra), Some(rb)) = (find(a), find(b)) {
                    if effective_loss(ra) <= effective_loss(rb) && effective_loss(ra).is_finite() {
                        wins += 1;
                    }
                }
            }
            HeadToHead {
                first: a.clone(),
                second: b.clone(),
                first_wins: wins,
                seeds: cfg.seeds.len(),
                win_fraction: wins as f64 / cfg.seeds.len() as f64,
            }
        });
        Self {
            runs,
            variants,
            head_to_head,
        }
    }
}

/// Runs every variant and seed on a pool of `jobs` threads (`0` picks the
/// rayon default). Records come back in the order of [`SweepConfig::expand`].
pub fn sweep(cfg: &SweepConfig, jobs: usize) -> Result<(Vec<(usize, RunRecord)>, SweepReport)> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let jobs_list = cfg.expand();
    let records: Vec<(usize, RunRecord)> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|(i, c)| run(c).map(|r| (*i, r)))
            .collect::<Result<Vec<_>>>()
    })?;
    let report = SweepReport::from_records(cfg, &records);
    Ok((records, report))
}
