//! Runs Adam and S3 on the toy problem at a large learning rate and lists
//! the loss spikes the detector finds.

use optikit::harness::{run, OptimizerConfig, RunConfig, Schedule, TelemetryConfig};
use optikit::problems::ProblemConfig;

fn main() -> optikit::Result<()> {
    let lr = 3e-2;
    let optimizers = [
        (
            "adam",
            OptimizerConfig::Adam {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                weight_decay: 0.0,
                update_clip: None,
            },
        ),
        ("s3", OptimizerConfig::s3(0.95, 3.0)),
    ];
    for (label, optimizer) in optimizers {
        let rec = run(&RunConfig {
            problem: ProblemConfig::fig1(),
            optimizer,
            schedule: Schedule::constant(lr, 10_000),
            seed: 0,
            steps: 10_000,
            telemetry: TelemetryConfig::default(),
        })?;
        println!(
            "{label}: {} spikes, peak |u| {:.3}, final loss {:.3e}",
            rec.spikes.len(),
            rec.peak_update(),
            rec.final_loss.unwrap_or(f64::NAN)
        );
        for e in rec.spikes.iter().take(5) {
            println!(
                "  step {:>5}: {:.3e} -> {:.3e} (x{:.1}), preceding max |u| {:.3}",
                e.step, e.loss_before, e.loss_at, e.ratio, e.preceding_max_update
            );
        }
    }
    Ok(())
}
