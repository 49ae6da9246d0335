use serde::{Deserialize, Serialize};

use super::{
    apply_update, check_inputs, check_lr, check_nonnegative, check_unit_interval, GradFn,
    Optimizer, StepIntermediates,
};
use crate::error::{Error, Result};
use crate::numerics::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S3Hyper {
    /// Shared moving-average coefficient for both momenta.
    pub beta: f64,
    /// Order of the denominator momentum.
    pub p: f64,
    /// Decoupled weight decay.
    #[serde(default)]
    pub weight_decay: f64,
}

impl Default for S3Hyper {
    fn default() -> Self {
        Self {
            beta: 0.95,
            p: 3.0,
            weight_decay: 0.0,
        }
    }
}

impl S3Hyper {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        let h = Self {
            beta,
            p,
            weight_decay: 0.0,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Result<Self> {
        self.weight_decay = weight_decay;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("beta", self.beta, true)?;
        check_power(self.p)?;
        check_nonnegative("weight_decay", self.weight_decay)
    }
}

pub(crate) fn check_power(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidHyper {
            name: "p",
            value: p,
            reason: "power factor p within [1, +∞)",
        })
    }
}

struct KernelOut {
    m: Vec<f64>,
    s: Vec<f64>,
    n: Vec<f64>,
    b: Vec<f64>,
    update: Vec<f64>,
}

/// One step of the momentum recursions. The numerator pair (m, n) uses
/// `beta_num`, the denominator pair (s, b) uses `beta_den`; the public
/// optimizer passes the same value for both.
fn kernel(
    m: &ParamVector,
    s: &ParamVector,
    g: &ParamVector,
    beta_num: f64,
    beta_den: f64,
    p: f64,
) -> Result<KernelOut> {
    let d = g.dim();
    let mut out = KernelOut {
        m: Vec::with_capacity(d),
        s: Vec::with_capacity(d),
        n: Vec::with_capacity(d),
        b: Vec::with_capacity(d),
        update: Vec::with_capacity(d),
    };
    for j in 0..d {
        let gj = g[j];
        let gp = gj.abs().powf(p);
        let mj = beta_num * m[j] + (1.0 - beta_num) * gj;
        let sj = beta_den * s[j] + (1.0 - beta_den) * gp;
        let nj = beta_num * mj + (1.0 - beta_num) * gj;
        // |g|^p enters the denominator a second time, mirroring n.
        let bj = (beta_den * sj + (1.0 - beta_den) * gp).powf(1.0 / p);
        if !sj.is_finite() || !bj.is_finite() {
            return Err(Error::NonFinite {
                index: j,
                value: if sj.is_finite() { bj } else { sj },
                context: "p-th order momentum",
            });
        }
        let uj = if bj == 0.0 {
            if nj == 0.0 {
                0.0
            } else {
                // |g|^p underflowed while g itself did not
                return Err(Error::DivisionByZero { index: j });
            }
        } else {
            nj / bj
        };
        out.m.push(mj);
        out.s.push(sj);
        out.n.push(nj);
        out.b.push(bj);
        out.update.push(uj);
    }
    Ok(out)
}

/// SoftSignSGD: Nesterov-style numerator over the p-th root of a p-th order
/// momentum, one shared beta, no bias correction, no epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S3 {
    pub hyper: S3Hyper,
    m: ParamVector,
    s: ParamVector,
    t: u64,
}

impl S3 {
    pub fn new(dim: usize, hyper: S3Hyper) -> Result<Self> {
        hyper.validate()?;
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            hyper,
            m: ParamVector::zeros(dim),
            s: ParamVector::zeros(dim),
            t: 0,
        })
    }

    pub fn momentum(&self) -> &ParamVector {
        &self.m
    }

    pub fn power_momentum(&self) -> &ParamVector {
        &self.s
    }

    pub fn step_with_grad(
        &mut self,
        x: &mut ParamVector,
        g: &ParamVector,
        lr: f64,
    ) -> Result<StepIntermediates> {
        check_lr(lr)?;
        check_inputs(self.m.dim(), x, g)?;
        let h = self.hyper;
        let k = kernel(&self.m, &self.s, g, h.beta, h.beta, h.p)?;
        let update = ParamVector::new(k.update)?;
        let next = apply_update(x, &update, lr, h.weight_decay)?;
        self.m = ParamVector::new(k.m)?;
        self.s = ParamVector::new(k.s)?;
        self.t += 1;
        *x = next;
        Ok(StepIntermediates {
            numerator: ParamVector::new(k.n)?,
            denominator: ParamVector::new(k.b)?,
            update,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let s: S3 = serde_json::from_str(json)?;
        s.hyper.validate()?;
        s.m.ensure_same_dim(&s.s)?;
        s.m.ensure_finite("m")?;
        s.s.ensure_finite("s")?;
        if s.s.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("s must be nonnegative".into()));
        }
        if s.t == 0 && !(s.m.is_zero() && s.s.is_zero()) {
            return Err(Error::Config("t = 0 requires m = s = 0".into()));
        }
        Ok(s)
    }
}

impl Optimizer for S3 {
    fn name(&self) -> &'static str {
        "s3"
    }

    fn step(
        &mut self,
        x: &mut ParamVector,
        grad_at: &mut GradFn<'_>,
        lr: f64,
    ) -> Result<StepIntermediates> {
        let g = grad_at(x)?;
        self.step_with_grad(x, &g, lr)
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("finite state serializes")
    }
}

/// S3 with separate coefficients for the numerator and the denominator.
///
/// Only used to check the general two-coefficient ratio bound; the training
/// optimizer is [`S3`].
#[derive(Debug, Clone, PartialEq)]
pub struct S3TwoBeta {
    pub beta1: f64,
    pub beta2: f64,
    pub p: f64,
    m: ParamVector,
    s: ParamVector,
    t: u64,
}

impl S3TwoBeta {
    pub fn new(dim: usize, beta1: f64, beta2: f64, p: f64) -> Result<Self> {
        check_unit_interval("beta1", beta1, true)?;
        check_unit_interval("beta2", beta2, true)?;
        check_power(p)?;
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            beta1,
            beta2,
            p,
            m: ParamVector::zeros(dim),
            s: ParamVector::zeros(dim),
            t: 0,
        })
    }

    /// Feeds one gradient and returns `(n, b, n / b)` without touching any
    /// parameters.
    pub fn observe(&mut self, g: &ParamVector) -> Result<StepIntermediates> {
        self.m.ensure_same_dim(g)?;
        g.ensure_finite("gradient")?;
        let k = kernel(&self.m, &self.s, g, self.beta1, self.beta2, self.p)?;
        self.m = ParamVector::new(k.m)?;
        self.s = ParamVector::new(k.s)?;
        self.t += 1;
        Ok(StepIntermediates {
            numerator: ParamVector::new(k.n)?,
            denominator: ParamVector::new(k.b)?,
            update: ParamVector::new(k.update)?,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    /// Hand-unrolled first step from zero state: n = (1 - b^2) g and
    /// b = (1 - b^2)^(1/p) |g|, so |n / b| = (1 - b^2)^(1 - 1/p).
    fn first_step_ratio(beta: f64, p: f64) -> f64 {
        (1.0 - beta * beta).powf(1.0 - 1.0 / p)
    }

    #[test]
    fn first_step_with_p1_is_sign() {
        for &beta in &[0.0, 0.5, 0.9, 0.95, 0.99] {
            let mut opt = S3::new(1, S3Hyper::new(beta, 1.0).unwrap()).unwrap();
            let mut x = pv(&[0.0]);
            let step = opt.step_with_grad(&mut x, &pv(&[-2.5]), 1.0).unwrap();
            assert!((step.update[0] - (-1.0)).abs() < 1e-15, "beta {beta}");
            assert!((x[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn first_step_with_p2_matches_closed_form() {
        let expected = first_step_ratio(0.95, 2.0);
        assert!((expected - 0.312_249_899_919_871_8).abs() < 1e-12);
        let mut opt = S3::new(1, S3Hyper::new(0.95, 2.0).unwrap()).unwrap();
        let mut x = pv(&[0.0]);
        let step = opt.step_with_grad(&mut x, &pv(&[3.7]), 1.0).unwrap();
        assert!((step.update[0] - expected).abs() < 1e-12);
        for &(beta, p) in &[(0.5, 3.0), (0.9, 5.0), (0.99, 1.5)] {
            let mut opt = S3::new(1, S3Hyper::new(beta, p).unwrap()).unwrap();
            let step = opt
                .step_with_grad(&mut pv(&[1.0]), &pv(&[0.02]), 1.0)
                .unwrap();
            assert!((step.update[0] - first_step_ratio(beta, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_alone() {
        let mut opt = S3::new(2, S3Hyper::new(0.9, 3.0).unwrap()).unwrap();
        let mut x = pv(&[1.0, -2.0]);
        for _ in 0..10 {
            let step = opt.step_with_grad(&mut x, &pv(&[0.0, 0.0]), 0.1).unwrap();
            assert!(step.update.is_zero());
        }
        assert_eq!(x, pv(&[1.0, -2.0]));
        assert_eq!(opt.steps_taken(), 10);

        let hyper = S3Hyper::new(0.9, 3.0)
            .unwrap()
            .with_weight_decay(0.5)
            .unwrap();
        let mut opt = S3::new(1, hyper).unwrap();
        let mut x = pv(&[2.0]);
        opt.step_with_grad(&mut x, &pv(&[0.0]), 0.1).unwrap();
        assert!((x[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn invalid_power_is_rejected() {
        let err = S3Hyper::new(0.9, 0.5).unwrap_err();
        assert!(err.to_string().contains("p within [1, +∞)"), "{err}");
        assert!(S3Hyper::new(1.5, 2.0).is_err());
    }

    #[test]
    fn errors_leave_state_untouched() {
        let mut opt = S3::new(2, S3Hyper::default()).unwrap();
        let mut x = pv(&[1.0, 1.0]);
        opt.step_with_grad(&mut x, &pv(&[0.3, -0.1]), 0.1).unwrap();
        let before = (opt.clone(), x.clone());
        assert!(opt
            .step_with_grad(&mut x, &pv(&[f64::NAN, 0.0]), 0.1)
            .is_err());
        assert!(opt.step_with_grad(&mut x, &pv(&[1.0]), 0.1).is_err());
        assert!(opt.step_with_grad(&mut x, &pv(&[1.0, 1.0]), -1.0).is_err());
        assert_eq!((opt, x), before);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut opt = S3::new(3, S3Hyper::new(0.95, 3.0).unwrap()).unwrap();
        let mut x = pv(&[1.0, 2.0, 3.0]);
        let mut rng = RngStream::new(3);
        for _ in 0..5 {
            let g = crate::numerics::gaussian_noise(&mut rng, 3, 1.0).unwrap();
            opt.step_with_grad(&mut x, &g, 0.01).unwrap();
        }
        let snap = opt.snapshot();
        for key in ["m", "s", "t", "hyper"] {
            assert!(snap.get(key).is_some(), "missing {key}");
        }
        let back = S3::from_json(&snap.to_string()).unwrap();
        assert_eq!(back, opt);
    }

    #[test]
    fn restore_rejects_bad_state() {
        let bad = r#"{"hyper":{"beta":0.9,"p":2.0},"m":[1.0],"s":[-1.0],"t":3}"#;
        assert!(S3::from_json(bad).is_err());
        let bad = r#"{"hyper":{"beta":0.9,"p":2.0},"m":[1.0],"s":[1.0],"t":0}"#;
        assert!(S3::from_json(bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stream() -> impl Strategy<Value = Vec<Vec<f64>>> {
            proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 1..60)
        }

        proptest! {
            #[test]
            fn update_never_exceeds_one(
                grads in stream(),
                beta in 0.0f64..=1.0,
                p in 1.0f64..6.0,
            ) {
                let mut opt = S3::new(3, S3Hyper::new(beta, p).unwrap()).unwrap();
                let mut x = pv(&[0.0; 3]);
                for g in &grads {
                    let step = opt.step_with_grad(&mut x, &pv(g), 1e-3).unwrap();
                    for &u in &step.update {
                        prop_assert!(u.abs() <= 1.0 + 1e-12, "{u}");
                    }
                }
            }

            #[test]
            fn denominator_grows_with_p(
                grads in stream(),
                beta in 0.0f64..1.0,
                p1 in 1.0f64..4.0,
                dp in 0.0f64..3.0,
            ) {
                let p2 = p1 + dp;
                let mut lo = S3::new(3, S3Hyper::new(beta, p1).unwrap()).unwrap();
                let mut hi = S3::new(3, S3Hyper::new(beta, p2).unwrap()).unwrap();
                let (mut x1, mut x2) = (pv(&[0.0; 3]), pv(&[0.0; 3]));
                for g in &grads {
                    let a = lo.step_with_grad(&mut x1, &pv(g), 0.0).unwrap();
                    let b = hi.step_with_grad(&mut x2, &pv(g), 0.0).unwrap();
                    for (bl, bh) in a.denominator.iter().zip(b.denominator.iter()) {
                        prop_assert!(*bl <= bh * (1.0 + 1e-12), "{bl} > {bh}");
                    }
                }
            }

            #[test]
            fn update_is_invariant_to_gradient_scale(
                grads in stream(),
                c in 1e-3f64..1e3,
                beta in 0.0f64..1.0,
                p in 1.0f64..4.0,
            ) {
                let mut a = S3::new(3, S3Hyper::new(beta, p).unwrap()).unwrap();
                let mut b = S3::new(3, S3Hyper::new(beta, p).unwrap()).unwrap();
                let (mut x1, mut x2) = (pv(&[0.0; 3]), pv(&[0.0; 3]));
                for g in &grads {
                    let ua = a.step_with_grad(&mut x1, &pv(g), 0.1).unwrap().update;
                    let ub = b.step_with_grad(&mut x2, &pv(g).scaled(c), 0.1).unwrap().update;
                    for (u, v) in ua.iter().zip(ub.iter()) {
                        prop_assert!((u - v).abs() <= 1e-9, "{u} vs {v}");
                    }
                }
            }

            #[test]
            fn step_counter_increments(grads in stream()) {
                let mut opt = S3::new(3, S3Hyper::default()).unwrap();
                let mut x = pv(&[0.0; 3]);
                for (i, g) in grads.iter().enumerate() {
                    opt.step_with_grad(&mut x, &pv(g), 0.01).unwrap();
                    prop_assert_eq!(opt.steps_taken(), i as u64 + 1);
                    prop_assert!(opt.power_momentum().iter().all(|&v| v >= 0.0));
                }
            }
        }
    }
}
