//! Flat fp64 vectors, coordinate-wise arithmetic, seeded noise and the
//! central-difference gradient oracle.

use std::ops::Index;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters, gradients and per-coordinate moments.
///
/// Always holds at least one coordinate. Serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector {
    data: Vec<f64>,
}

impl ParamVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(Self { data })
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        Self::new(data.to_vec())
    }

    /// # Panics
    /// If `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        Self::filled(dim, 0.0)
    }

    /// # Panics
    /// If `dim == 0`.
    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim > 0, "ParamVector needs at least one coordinate");
        Self {
            data: vec![value; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Errors on the first NaN/Inf coordinate.
    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                index,
                value: self.data[index],
                context,
            }),
            None => Ok(()),
        }
    }

    pub fn ensure_same_dim(&self, other: &ParamVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        ParamVector {
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> ParamVector {
        self.map(|v| v * c)
    }

    pub fn norms(&self) -> Norms {
        norms(self)
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(data: Vec<f64>) -> Result<Self> {
        Self::new(data)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Self {
        v.data
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl<'a> IntoIterator for &'a ParamVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.data.iter()
    }
}

/// Sign with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// How a division treats a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroDivision {
    /// Any zero denominator is an error.
    #[default]
    Error,
    /// `0 / 0` evaluates to `0`; a nonzero numerator over zero is still an error.
    ZeroOverZeroIsZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div(ZeroDivision),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryOp {
    Abs,
    Sign,
    PowScalar(f64),
}

pub fn binary(op: BinaryOp, a: &ParamVector, b: &ParamVector) -> Result<ParamVector> {
    a.ensure_same_dim(b)?;
    let mut out = Vec::with_capacity(a.dim());
    for (index, (&x, &y)) in a.iter().zip(b.iter()).enumerate() {
        let v = match op {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div(policy) => {
                if y == 0.0 {
                    match policy {
                        ZeroDivision::ZeroOverZeroIsZero if x == 0.0 => 0.0,
                        _ => return Err(Error::DivisionByZero { index }),
                    }
                } else {
                    x / y
                }
            }
        };
        out.push(v);
    }
    let out = ParamVector { data: out };
    out.ensure_finite("elementwise result")?;
    Ok(out)
}

pub fn unary(op: UnaryOp, a: &ParamVector) -> Result<ParamVector> {
    let out = match op {
        UnaryOp::Abs => a.map(f64::abs),
        UnaryOp::Sign => a.map(sign),
        UnaryOp::PowScalar(e) => a.map(|v| v.powf(e)),
    };
    out.ensure_finite("elementwise result")?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn norms(a: &ParamVector) -> Norms {
    let mut l1 = 0.0;
    let mut sq = 0.0;
    let mut linf: f64 = 0.0;
    for &v in a {
        let m = v.abs();
        l1 += m;
        sq += v * v;
        linf = linf.max(m);
    }
    Norms {
        l1,
        l2: sq.sqrt(),
        linf,
    }
}

pub fn l2_distance(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    a.ensure_same_dim(b)?;
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Seeded random stream. ChaCha8 keeps seeds portable across platforms.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub const ALGORITHM_ID: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        Self::ALGORITHM_ID
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn standard_normal(&mut self) -> f64 {
        let n: f64 = rand_distr::StandardNormal.sample(&mut self.rng);
        n
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        use rand::Rng;
        self.rng.gen_range(low..high)
    }

    pub fn below(&mut self, n: usize) -> usize {
        use rand::Rng;
        self.rng.gen_range(0..n)
    }
}

/// `dim` iid draws from `Normal(0, sigma)`; `sigma` is a standard deviation.
pub fn gaussian_noise(rng: &mut RngStream, dim: usize, sigma: f64) -> Result<ParamVector> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidHyper {
            name: "sigma",
            value: sigma,
            reason: "noise scale must be finite and >= 0",
        });
    }
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    if sigma == 0.0 {
        return Ok(ParamVector::zeros(dim));
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    Ok(ParamVector {
        data: (0..dim).map(|_| normal.sample(&mut rng.rng)).collect(),
    })
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h` per coordinate.
pub fn finite_diff_gradient<F>(f: F, x: &ParamVector, h: f64) -> Result<ParamVector>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidHyper {
            name: "h",
            value: h,
            reason: "step must be finite and > 0",
        });
    }
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.dim());
    for j in 0..x.dim() {
        let orig = probe.data[j];
        probe.data[j] = orig + h;
        let plus = f(&probe)?;
        probe.data[j] = orig - h;
        let minus = f(&probe)?;
        probe.data[j] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                index: j,
                value: if plus.is_finite() { minus } else { plus },
                context: "finite-difference evaluation",
            });
        }
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(ParamVector { data: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    #[test]
    fn sign_maps_zero_to_zero() {
        let s = unary(UnaryOp::Sign, &pv(&[-3.0, 0.0, 2.0])).unwrap();
        assert_eq!(s.as_slice(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn abs_and_pow() {
        assert_eq!(
            unary(UnaryOp::Abs, &pv(&[-1.5, 2.0])).unwrap().as_slice(),
            &[1.5, 2.0]
        );
        assert_eq!(
            unary(UnaryOp::PowScalar(2.0), &pv(&[3.0, -2.0]))
                .unwrap()
                .as_slice(),
            &[9.0, 4.0]
        );
    }

    #[test]
    fn division_policies() {
        let zero = pv(&[0.0]);
        assert_eq!(
            binary(
                BinaryOp::Div(ZeroDivision::ZeroOverZeroIsZero),
                &zero,
                &zero
            )
            .unwrap()
            .as_slice(),
            &[0.0]
        );
        assert_eq!(
            binary(BinaryOp::Div(ZeroDivision::Error), &zero, &zero),
            Err(Error::DivisionByZero { index: 0 })
        );
        // only 0/0 is forgiven
        assert_eq!(
            binary(
                BinaryOp::Div(ZeroDivision::ZeroOverZeroIsZero),
                &pv(&[1.0, 1.0]),
                &pv(&[1.0, 0.0])
            ),
            Err(Error::DivisionByZero { index: 1 })
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = binary(BinaryOp::Add, &pv(&[1.0]), &pv(&[1.0, 2.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 1,
                actual: 2
            }
        );
    }

    #[test]
    fn empty_vectors_are_rejected() {
        assert_eq!(ParamVector::new(vec![]), Err(Error::EmptyVector));
        assert!(serde_json::from_str::<ParamVector>("[]").is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(
            norms(&pv(&[3.0, -4.0])),
            Norms {
                l1: 7.0,
                l2: 5.0,
                linf: 4.0
            }
        );
        assert_eq!(
            norms(&pv(&[0.0, 0.0])),
            Norms {
                l1: 0.0,
                l2: 0.0,
                linf: 0.0
            }
        );
        assert_eq!(
            norms(&pv(&[1.0; 4])),
            Norms {
                l1: 4.0,
                l2: 2.0,
                linf: 1.0
            }
        );
    }

    #[test]
    fn zero_sigma_noise_is_zero() {
        let mut rng = RngStream::new(7);
        assert!(gaussian_noise(&mut rng, 2, 0.0).unwrap().is_zero());
        assert!(gaussian_noise(&mut rng, 2, -1.0).is_err());
    }

    #[test]
    fn noise_moments_match_normal() {
        let mut rng = RngStream::new(2024);
        let n = 1_000_000;
        let draws = gaussian_noise(&mut rng, n, 0.1).unwrap();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 3e-4, "mean {mean}");
        assert!((var - 0.01).abs() <= 0.05 * 0.01, "var {var}");
    }

    #[test]
    fn same_seed_same_draws() {
        let a = gaussian_noise(&mut RngStream::new(11), 16, 1.0).unwrap();
        let b = gaussian_noise(&mut RngStream::new(11), 16, 1.0).unwrap();
        assert_eq!(a, b);
        let c = gaussian_noise(&mut RngStream::new(12), 16, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn finite_diff_on_half_square() {
        let g = finite_diff_gradient(|x| Ok(0.5 * x[0] * x[0]), &pv(&[3.0]), 1e-5).unwrap();
        assert!((g[0] - 3.0).abs() <= 1e-8);
        let g = finite_diff_gradient(|_| Ok(4.2), &pv(&[1.0, -2.0]), 1e-3).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn finite_diff_names_bad_coordinate() {
        let err = finite_diff_gradient(
            |x| Ok(if x[1] > 0.5 { f64::INFINITY } else { x[0] }),
            &pv(&[0.0, 0.5]),
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sign_is_idempotent_and_scale_free(
                v in proptest::collection::vec(-1e6f64..1e6, 1..16),
                c in 1e-6f64..1e6,
            ) {
                let a = pv(&v);
                let s = unary(UnaryOp::Sign, &a).unwrap();
                prop_assert_eq!(&unary(UnaryOp::Sign, &s).unwrap(), &s);
                prop_assert_eq!(&unary(UnaryOp::Sign, &a.scaled(c)).unwrap(), &s);
            }

            #[test]
            fn norm_ordering(v in proptest::collection::vec(-1e3f64..1e3, 1..16)) {
                let n = norms(&pv(&v));
                prop_assert!(n.linf <= n.l2 + 1e-9);
                prop_assert!(n.l2 <= n.l1 + 1e-9);
            }
        }
    }
}
