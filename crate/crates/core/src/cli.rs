//! The `optikit` command line. [`main_with_args`] parses, dispatches and
//! returns the process exit code.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::{self, apply_overrides, fig1, RunConfig, RunStatus, Schedule, SweepConfig};
use crate::theory::{
    self, adam_ratio_bound, convergence_bound, s3_ratio_bound, verify::THEOREM_IDS, BoundInputs,
    ConvergenceBudget,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_THEOREM: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "optikit",
    version,
    about = "S3 and baseline optimizers: runs, sweeps and bound checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, env = "OPTIKIT_OUT", default_value = "optikit-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded training job from a JSON run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Dotted `key=value` override, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run every variant and seed of a sweep config in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Replaces the seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check a theorem over a parameter grid and write a JSON report.
    Verify {
        /// One of t1, t2, t3, t4, or `all`.
        theorem: String,
        /// Grid JSON replacing the default grid.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Feed the bound-attaining gradient stream to Adam and record ratios.
    Adversarial {
        #[arg(long, default_value_t = 0.9)]
        beta1: f64,
        #[arg(long, default_value_t = 0.999)]
        beta2: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate a closed-form bound and print it as JSON.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Write the per-step learning rate of a schedule as CSV.
    ScheduleDump {
        /// A run config or a bare schedule object.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Reproduce the two-dimensional toy comparison.
    Fig1 {
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = fig1::FIG1_STEPS)]
        steps: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// Adam's per-coordinate update bound, step-wise when `--t` is given.
    Adam {
        #[arg(long, default_value_t = 0.9)]
        beta1: f64,
        #[arg(long, default_value_t = 0.999)]
        beta2: f64,
        #[arg(long)]
        t: Option<u64>,
    },
    /// S3's update bound with separate momentum coefficients.
    S3 {
        #[arg(long)]
        beta1: f64,
        #[arg(long)]
        beta2: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
    },
    /// The averaged gradient-norm bound from a JSON budget.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::NonFinite { .. }
        | Error::DivisionByZero { .. }
        | Error::Overflow(_)
        | Error::Domain(_)
        | Error::MlpNonFinite { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Parses the file, then applies `key=value` overrides to the fully
/// populated document so defaulted keys can be overridden too.
fn with_defaults_and_overrides<T>(path: &Path, set: &[String]) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let parsed: T = serde_json::from_value(read_json(path)?)?;
    if set.is_empty() {
        return Ok(parsed);
    }
    let mut doc = serde_json::to_value(&parsed)?;
    apply_overrides(&mut doc, set)?;
    Ok(serde_json::from_value(doc)?)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Train {
            config,
            out,
            seed,
            set,
        } => train(&config, &out.out, seed, &set),
        Command::Sweep {
            config,
            out,
            jobs,
            seed,
            set,
        } => sweep(&config, &out.out, jobs, seed, &set),
        Command::Verify {
            theorem,
            config,
            out,
            set,
        } => verify(&theorem, config.as_deref(), &out.out, &set),
        Command::Adversarial {
            beta1,
            beta2,
            steps,
            out,
        } => adversarial(beta1, beta2, steps, &out.out),
        Command::Bound { which } => bound(which),
        Command::ScheduleDump { config, out, set } => schedule_dump(&config, &out.out, &set),
        Command::Fig1 { out, seed, steps } => {
            let (records, paths) = fig1::write_fig1(&out.out, seed, steps)?;
            for (rec, path) in records.iter().zip(&paths) {
                println!(
                    "{} final_loss={} spikes={}",
                    path.display(),
                    rec.final_loss.map_or("none".into(), |l| l.to_string()),
                    rec.spikes.len()
                );
            }
            Ok(if records.iter().any(|r| r.diverged()) {
                EXIT_DIVERGED
            } else {
                EXIT_OK
            })
        }
    }
}

fn train(config: &Path, out: &Path, seed: Option<u64>, set: &[String]) -> Result<i32> {
    let mut overrides = set.to_vec();
    if let Some(s) = seed {
        overrides.push(format!("seed={s}"));
    }
    let cfg: RunConfig = with_defaults_and_overrides(config, &overrides)?;
    cfg.validate()?;
    let rec = harness::run(&cfg)?;
    let paths = rec.write_all(out, &stem_of(config))?;
    for p in &paths {
        println!("{}", p.display());
    }
    match &rec.status {
        RunStatus::Completed => {
            println!(
                "completed {} steps, final_loss={}, spikes={}",
                rec.stats.len(),
                rec.final_loss.map_or("none".into(), |l| l.to_string()),
                rec.spikes.len()
            );
            Ok(EXIT_OK)
        }
        RunStatus::Diverged { step, reason } => {
            eprintln!("diverged at step {step}: {reason}");
            Ok(EXIT_DIVERGED)
        }
    }
}

fn sweep(config: &Path, out: &Path, jobs: usize, seed: Option<u64>, set: &[String]) -> Result<i32> {
    let mut cfg: SweepConfig = with_defaults_and_overrides(config, set)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let (records, report) = harness::sweep(&cfg, jobs)?;
    let stem = stem_of(config);
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    for (i, rec) in &records {
        let name = format!(
            "{stem}.{}.seed{}.summary.json",
            cfg.variants[*i].label, rec.config.seed
        );
        rec.write_summary(&runs_dir.join(name))?;
    }
    let path = out.join(format!("{stem}.report.json"));
    write_json(&path, &report)?;
    println!("{}", path.display());
    for v in &report.variants {
        println!(
            "{}: runs={} diverged={} unstable={} median_final_loss={}",
            v.label,
            v.runs,
            v.diverged,
            v.unstable,
            v.median_final_loss.map_or("none".into(), |l| l.to_string())
        );
    }
    if let Some(h) = &report.head_to_head {
        println!(
            "{} beats {} on {}/{} seeds",
            h.first, h.second, h.first_wins, h.seeds
        );
    }
    Ok(EXIT_OK)
}

fn verify(id: &str, config: Option<&Path>, out: &Path, set: &[String]) -> Result<i32> {
    let ids: Vec<&str> = if id == "all" {
        THEOREM_IDS.to_vec()
    } else if THEOREM_IDS.contains(&id) {
        vec![id]
    } else {
        return Err(Error::Config(format!(
            "unknown theorem id {id:?}; valid ids are {}, all",
            THEOREM_IDS.join(", ")
        )));
    };
    if ids.len() > 1 && config.is_some() {
        return Err(Error::Config("--config needs a single theorem id".into()));
    }
    let mut all_pass = true;
    for id in ids {
        let mut grid = match config {
            Some(p) => Some(read_json(p)?),
            None => None,
        };
        if !set.is_empty() {
            let mut full = theory::verify::resolve_grid(id, grid)?;
            apply_overrides(&mut full, set)?;
            grid = Some(full);
        }
        let report = theory::verify_theorem(id, grid)?;
        let path = out.join(format!("verify_{id}.json"));
        write_json(&path, &report)?;
        let errors = report.cells.iter().filter(|c| c.error.is_some()).count();
        println!(
            "{id}: {} max_violation={:e} tolerance={:e} cells={} precondition_errors={errors} -> {}",
            if report.pass { "pass" } else { "FAIL" },
            report.max_violation,
            report.tolerance,
            report.cells.len(),
            path.display()
        );
        all_pass &= report.pass;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_THEOREM })
}

fn adversarial(beta1: f64, beta2: f64, steps: usize, out: &Path) -> Result<i32> {
    let run = theory::simulate_adversarial_adam(beta1, beta2, steps)?;
    fs::create_dir_all(out)?;
    let csv = out.join("adversarial.csv");
    let mut f = BufWriter::new(fs::File::create(&csv)?);
    writeln!(f, "step,ratio,bound")?;
    for (t, (r, b)) in run.ratios.iter().zip(&run.bounds).enumerate() {
        writeln!(f, "{},{r},{b}", t + 1)?;
    }
    f.flush()?;
    let violation = run.max_violation();
    let summary = serde_json::json!({
        "beta1": beta1,
        "beta2": beta2,
        "steps": steps,
        "sup_ratio": run.sup_ratio,
        "final_bound": run.bounds.last(),
        "asymptotic_bound": run.asymptotic_bound,
        "max_violation": violation,
    });
    write_json(&out.join("adversarial.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if violation <= 1e-9 {
        EXIT_OK
    } else {
        EXIT_THEOREM
    })
}

fn bound(which: BoundCommand) -> Result<i32> {
    let value = match which {
        BoundCommand::Adam { beta1, beta2, t } => serde_json::json!({
            "beta1": beta1,
            "beta2": beta2,
            "t": t,
            "bound": adam_ratio_bound(beta1, beta2, t)?,
        }),
        BoundCommand::S3 { beta1, beta2, p } => {
            let inputs = BoundInputs::new(beta1, beta2, p)?;
            serde_json::json!({
                "beta1": beta1,
                "beta2": beta2,
                "p": p,
                "q": inputs.q(),
                "bound": s3_ratio_bound(&inputs)?,
            })
        }
        BoundCommand::Convergence { config, set } => {
            let budget: ConvergenceBudget = with_defaults_and_overrides(&config, &set)?;
            serde_json::to_value(convergence_bound(&budget)?)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(EXIT_OK)
}

fn schedule_dump(config: &Path, out: &Path, set: &[String]) -> Result<i32> {
    let mut doc = read_json(config)?;
    apply_overrides(&mut doc, set)?;
    let schedule: Schedule = match doc.get("schedule") {
        Some(s) => serde_json::from_value(s.clone())?,
        None => serde_json::from_value(doc)?,
    };
    schedule.validate()?;
    fs::create_dir_all(out)?;
    let path = out.join(format!("{}.schedule.csv", stem_of(config)));
    let mut f = BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "step,lr")?;
    for step in 0..=schedule.total_steps {
        writeln!(f, "{step},{}", schedule.lr_at(step)?)?;
    }
    f.flush()?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}
