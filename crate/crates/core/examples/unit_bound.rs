//! S3 with one shared beta never moves a coordinate by more than `lr`,
//! whatever the gradients look like. With separate betas the ratio is
//! bounded by a closed form instead.

use optikit::optim::{S3Hyper, S3TwoBeta, S3};
use optikit::theory::{s3_ratio_bound, BoundInputs, StreamFamily};
use optikit::{ParamVector, RngStream};

fn main() -> optikit::Result<()> {
    let mut rng = RngStream::new(0);
    println!("{:<22} {:>10}", "family", "max |u|");
    for family in StreamFamily::ALL {
        let stream = family.generate(4, 1000, &mut rng);
        let mut worst = 0.0f64;
        for p in [1.0, 2.0, 3.0, 5.0] {
            let mut opt = S3::new(4, S3Hyper::new(0.9, p)?)?;
            let mut x = ParamVector::zeros(4);
            for g in &stream {
                let out = opt.step_with_grad(&mut x, g, 1e-3)?;
                worst = worst.max(out.update.norms().linf);
            }
        }
        println!("{:<22} {:>10.6}", format!("{family:?}"), worst);
    }

    let inputs = BoundInputs::new(0.9, 0.99, 2.0)?;
    let bound = s3_ratio_bound(&inputs)?;
    let mut opt = S3TwoBeta::new(1, 0.9, 0.99, 2.0)?;
    let mut worst = 0.0f64;
    for g in StreamFamily::Cauchy.generate(1, 5000, &mut rng) {
        worst = worst.max(opt.observe(&g)?.update.norms().linf);
    }
    println!("two betas (0.9, 0.99), p = 2: realized {worst:.4} <= bound {bound:.4}");
    Ok(())
}
