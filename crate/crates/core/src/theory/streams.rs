//! Gradient stream families for the update-bound checks.

use rand_distr::{Cauchy, Distribution, LogNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::numerics::{ParamVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamFamily {
    Normal,
    NormalTiny,
    NormalHuge,
    NormalBiased,
    Uniform,
    Rademacher,
    Cauchy,
    StudentT2,
    LogNormal,
    Constant,
    ConstantNegative,
    Alternating,
    AlternatingGrowing,
    SquareWave,
    Sine,
    /// Adam's bound-attaining stream for (0.9, 0.999): `g_t = (beta2 / beta1)^t`.
    Adversarial,
    Decaying,
    Sparse,
    Impulse,
    Zeros,
    MixedScales,
    NoiseWithSpikes,
}

impl StreamFamily {
    pub const ALL: [StreamFamily; 22] = [
        StreamFamily::Normal,
        StreamFamily::NormalTiny,
        StreamFamily::NormalHuge,
        StreamFamily::NormalBiased,
        StreamFamily::Uniform,
        StreamFamily::Rademacher,
        StreamFamily::Cauchy,
        StreamFamily::StudentT2,
        StreamFamily::LogNormal,
        StreamFamily::Constant,
        StreamFamily::ConstantNegative,
        StreamFamily::Alternating,
        StreamFamily::AlternatingGrowing,
        StreamFamily::SquareWave,
        StreamFamily::Sine,
        StreamFamily::Adversarial,
        StreamFamily::Decaying,
        StreamFamily::Sparse,
        StreamFamily::Impulse,
        StreamFamily::Zeros,
        StreamFamily::MixedScales,
        StreamFamily::NoiseWithSpikes,
    ];

    /// Families whose coordinates can be exactly zero. Adam without epsilon
    /// is undefined on those until a nonzero gradient arrives.
    pub fn may_contain_zeros(self) -> bool {
        matches!(
            self,
            StreamFamily::Sparse | StreamFamily::Impulse | StreamFamily::Zeros
        )
    }

    /// `steps` gradients of dimension `dim`. Growth rates are chosen so that
    /// `|g|^5` stays finite over 1000 steps.
    pub fn generate(self, dim: usize, steps: usize, rng: &mut RngStream) -> Vec<ParamVector> {
        let cauchy = Cauchy::new(0.0, 1.0).expect("valid");
        let student = StudentT::new(2.0).expect("valid");
        let lognormal = LogNormal::new(0.0, 2.0).expect("valid");
        let offsets: Vec<f64> = (0..dim)
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect();
        (0..steps)
            .map(|t| {
                let tf = t as f64;
                let data = (0..dim)
                    .map(|j| match self {
                        StreamFamily::Normal => rng.standard_normal(),
                        StreamFamily::NormalTiny => 1e-8 * rng.standard_normal(),
                        StreamFamily::NormalHuge => 1e8 * rng.standard_normal(),
                        StreamFamily::NormalBiased => 1.0 + 0.1 * rng.standard_normal(),
                        StreamFamily::Uniform => rng.uniform(-1.0, 1.0),
                        StreamFamily::Rademacher => {
                            if rng.below(2) == 0 {
                                -1.0
                            } else {
                                1.0
                            }
                        }
                        StreamFamily::Cauchy => cauchy.sample(rng.rng()),
                        StreamFamily::StudentT2 => student.sample(rng.rng()),
                        StreamFamily::LogNormal => {
                            let s = if rng.below(2) == 0 { -1.0 } else { 1.0 };
                            s * lognormal.sample(rng.rng())
                        }
                        StreamFamily::Constant => 0.5,
                        StreamFamily::ConstantNegative => -3.0,
                        StreamFamily::Alternating => {
                            if t % 2 == 0 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        StreamFamily::AlternatingGrowing => {
                            let s = if t % 2 == 0 { 1.0 } else { -1.0 };
                            s * 1.1f64.powf(tf)
                        }
                        StreamFamily::SquareWave => {
                            if (t / 10) % 2 == 0 {
                                2.0
                            } else {
                                -2.0
                            }
                        }
                        StreamFamily::Sine => (0.05 * tf + offsets[j]).sin(),
                        StreamFamily::Adversarial => (0.999f64 / 0.9).powf(tf),
                        StreamFamily::Decaying => 0.9f64.powf(tf),
                        StreamFamily::Sparse => {
                            if rng.below(20) == 0 {
                                rng.standard_normal()
                            } else {
                                0.0
                            }
                        }
                        StreamFamily::Impulse => {
                            if t == steps / 2 {
                                1e6
                            } else {
                                0.0
                            }
                        }
                        StreamFamily::Zeros => 0.0,
                        StreamFamily::MixedScales => {
                            10f64.powi(j as i32 % 9 - 4) * rng.standard_normal()
                        }
                        StreamFamily::NoiseWithSpikes => {
                            let g = 0.01 * rng.standard_normal();
                            if rng.below(100) == 0 {
                                g + 1e4
                            } else {
                                g
                            }
                        }
                    })
                    .collect();
                ParamVector::new(data).expect("dim >= 1")
            })
            .collect()
    }
}
