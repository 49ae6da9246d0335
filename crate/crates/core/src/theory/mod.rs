//! Executable versions of the update-bound, equivalence and convergence
//! results, plus empirical estimators for the smoothness and noise
//! assumptions.

mod adversarial;
mod bounds;
mod convergence;
mod equivalence;
mod estimators;
mod streams;
pub mod verify;

pub use adversarial::{
    adversarial_sequence, simulate_adversarial_adam, AdversarialRun, AdversarialStream,
};
pub use bounds::{adam_ratio_bound, s3_ratio_bound, BoundInputs};
pub use convergence::{convergence_bound, ConvergenceBudget, ConvergenceReport};
pub use equivalence::{nag_equivalence_check, NagReport};
pub use estimators::{estimate_generalized_smoothness, estimate_noise_sigma, SmoothnessEstimate};
pub use streams::StreamFamily;
pub use verify::{verify_theorem, VerifyCell, VerifyReport};
