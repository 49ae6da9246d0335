//! Sign-like adaptive optimizers and the tooling to check their update
//! bounds.
//!
//! * [`optim`]: S3, Adam/AdamW, SGD with momentum, SignSGD and three
//!   Nesterov forms, each a single-step state machine.
//! * [`theory`]: closed-form ratio bounds, the bound-attaining gradient
//!   stream, Nesterov equivalence checks and the convergence-bound evaluator.
//! * [`problems`]: objectives with analytic gradients, including a small MLP.
//! * [`harness`]: schedules, telemetry, spike detection, seeded runs and sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod optim;
pub mod problems;
pub mod theory;

pub use error::{Error, Result};
pub use numerics::{ParamVector, RngStream};
