//! Fits the generalized smoothness constants along an S3 trajectory and
//! measures gradient noise on the toy problem.

use optikit::harness::{run, OptimizerConfig, RunConfig, Schedule, TelemetryConfig};
use optikit::problems::{Fig1, ProblemConfig};
use optikit::theory::{estimate_generalized_smoothness, estimate_noise_sigma};
use optikit::{ParamVector, RngStream};

fn main() -> optikit::Result<()> {
    let rec = run(&RunConfig {
        problem: ProblemConfig::Fig1 { noise_sigma: 0.0 },
        optimizer: OptimizerConfig::s3(0.95, 3.0),
        schedule: Schedule::constant(3e-3, 2000),
        seed: 0,
        steps: 2000,
        telemetry: TelemetryConfig {
            record_params: true,
            ..TelemetryConfig::default()
        },
    })?;
    let traj: Vec<ParamVector> = rec
        .trajectory
        .unwrap_or_default()
        .into_iter()
        .map(ParamVector::new)
        .collect::<optikit::Result<_>>()?;

    let clean = Fig1::new(0.0)?;
    let est = estimate_generalized_smoothness(&clean, &traj, 0.1)?;
    println!(
        "L0 ~ {:.3}, L1 ~ {:.3} from {} pairs",
        est.l0, est.l1, est.pairs
    );

    let noisy = Fig1::new(0.1)?;
    let sigma = estimate_noise_sigma(&noisy, &traj[0], 5000, &mut RngStream::new(1))?;
    println!("noise sigma ~ {sigma:.4} (0.1 per coordinate, 0.1414 in norm)");
    Ok(())
}
