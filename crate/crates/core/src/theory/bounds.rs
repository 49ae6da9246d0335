use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_beta(name: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name,
            value: v,
            reason: "must lie within [0, 1)",
        })
    }
}

/// Largest possible `|m_t / sqrt(v_t)|` for bias-corrected Adam without
/// epsilon, over all gradient streams.
///
/// With `t` given this is the exact step-`t` bound
/// `(1-b1) sqrt(1-b2^t) sqrt(1-(b1^2/b2)^t) / ((1-b1^t) sqrt(1-b2) sqrt(1-b1^2/b2))`;
/// without it, the `t -> inf` limit.
pub fn adam_ratio_bound(beta1: f64, beta2: f64, t: Option<u64>) -> Result<f64> {
    check_beta("beta1", beta1)?;
    check_beta("beta2", beta2)?;
    if beta1 * beta1 >= beta2 {
        return Err(Error::Precondition(format!(
            "beta1^2 < beta2 is required (beta1 = {beta1}, beta2 = {beta2})"
        )));
    }
    let rho = beta1 * beta1 / beta2;
    let base = (1.0 - beta1) / ((1.0 - beta2).sqrt() * (1.0 - rho).sqrt());
    match t {
        None => Ok(base),
        Some(0) => Err(Error::Precondition("step t must be >= 1".into())),
        Some(t) => {
            let t = i32::try_from(t).ok();
            let (b1t, b2t, rt) = match t {
                Some(t) => (beta1.powi(t), beta2.powi(t), rho.powi(t)),
                None => (0.0, 0.0, 0.0),
            };
            Ok(base * (1.0 - b2t).sqrt() * (1.0 - rt).sqrt() / (1.0 - b1t))
        }
    }
}

/// Coefficients of the two-coefficient S3 ratio bound. `q` is the Hölder
/// conjugate of `p`, infinite at `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub beta1: f64,
    pub beta2: f64,
    pub p: f64,
}

impl BoundInputs {
    pub fn new(beta1: f64, beta2: f64, p: f64) -> Result<Self> {
        let b = Self { beta1, beta2, p };
        b.validate()?;
        Ok(b)
    }

    pub fn q(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }

    /// `beta1 < beta2^(1/p)` with `beta1 = beta2` admitted as the limiting
    /// case (bound 1), which covers `p = 1` and `beta = 0`.
    pub fn validate(&self) -> Result<()> {
        crate::optim::check_power(self.p)?;
        check_beta("beta1", self.beta1)?;
        check_beta("beta2", self.beta2)?;
        if self.beta1 != self.beta2 && !(self.beta1 < self.beta2.powf(1.0 / self.p)) {
            return Err(Error::Precondition(format!(
                "beta1 < beta2^(1/p) is required (beta1 = {}, beta2 = {}, p = {})",
                self.beta1, self.beta2, self.p
            )));
        }
        Ok(())
    }
}

/// `(1-b1) / ((1-b2)^(1/p) (1 - b1^q / b2^(q/p))^(1/q))`, the largest
/// `|n_t| / b_t(p)` the two-coefficient S3 can produce. The second factor
/// is 1 at `p = 1`.
pub fn s3_ratio_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let BoundInputs { beta1, beta2, p } = *inputs;
    if beta1 == beta2 {
        // (1-b)^(1-1/p) / (1-b)^(1/q) with 1 - 1/p = 1/q
        return Ok(1.0);
    }
    let head = (1.0 - beta1) / (1.0 - beta2).powf(1.0 / p);
    if p == 1.0 {
        return Ok(head);
    }
    let q = inputs.q();
    let ratio = beta1 / beta2.powf(1.0 / p);
    Ok(head / (1.0 - ratio.powf(q)).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_bound_values() {
        let asym = adam_ratio_bound(0.9, 0.999, None).unwrap();
        assert!((asym - 7.2706).abs() <= 5e-4, "{asym}");
        assert!((adam_ratio_bound(0.9, 0.999, Some(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!(adam_ratio_bound(0.9, 0.81, None).is_err());
        assert!(adam_ratio_bound(0.9, 0.999, Some(0)).is_err());
        let near = adam_ratio_bound(0.9, 0.81 + 1e-9, None).unwrap();
        assert!(near > 1e3, "{near}");
        // very large t falls back to the asymptotic value
        let huge = adam_ratio_bound(0.9, 0.999, Some(u64::MAX)).unwrap();
        assert_eq!(huge, asym);
    }

    #[test]
    fn adam_bound_is_increasing_in_t() {
        let mut prev = 0.0;
        for t in 1..5000 {
            let b = adam_ratio_bound(0.9, 0.999, Some(t)).unwrap();
            assert!(b >= prev - 1e-15, "t = {t}");
            prev = b;
        }
    }

    #[test]
    fn s3_bound_special_cases() {
        for beta in [0.0, 0.5, 0.9, 0.95, 0.99] {
            for p in [1.0, 2.0, 3.0, 5.0] {
                let b = s3_ratio_bound(&BoundInputs::new(beta, beta, p).unwrap()).unwrap();
                assert_eq!(b, 1.0);
            }
        }
        let p1 = s3_ratio_bound(&BoundInputs::new(0.5, 0.9, 1.0).unwrap()).unwrap();
        assert!((p1 - 0.5 / 0.1).abs() < 1e-12);
        let p2 = s3_ratio_bound(&BoundInputs::new(0.9, 0.999, 2.0).unwrap()).unwrap();
        let adam = adam_ratio_bound(0.9, 0.999, None).unwrap();
        assert!((p2 - adam).abs() < 1e-9 * adam);
    }

    #[test]
    fn s3_bound_approaches_one_continuously() {
        // the general formula just off the diagonal agrees with the exact 1
        for p in [1.5, 2.0, 3.0] {
            let b = s3_ratio_bound(&BoundInputs::new(0.9 - 1e-9, 0.9, p).unwrap()).unwrap();
            assert!((b - 1.0).abs() < 1e-6, "p = {p}: {b}");
        }
    }

    #[test]
    fn s3_bound_preconditions() {
        assert!(BoundInputs::new(0.99, 0.9, 2.0).is_err());
        assert!(BoundInputs::new(0.9, 0.95, 0.5).is_err());
        // 0.95 < 0.9^(1/2) = 0.9487 fails
        assert!(BoundInputs::new(0.95, 0.9, 2.0).is_err());
        assert!(BoundInputs::new(0.94, 0.9, 2.0).is_ok());
        assert!(BoundInputs::new(0.9, 1.0, 2.0).is_err());
    }
}
