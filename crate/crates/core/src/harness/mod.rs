//! Training loop, schedules, telemetry and persistence.

mod config;
pub mod fig1;
mod run;
mod schedule;
mod sweep;
mod telemetry;

pub use config::{apply_overrides, OptimizerConfig, RunConfig, TelemetryConfig};
pub use run::{params_digest, run, RunRecord, RunStatus};
pub use schedule::{coupled_weight_decay, Schedule, ScheduleKind};
pub use sweep::{
    median, sweep, HeadToHead, SweepConfig, SweepReport, SweepRun, SweepVariant, VariantSummary,
};
pub use telemetry::{detect_spikes, SpikeEvent, StepStats};
