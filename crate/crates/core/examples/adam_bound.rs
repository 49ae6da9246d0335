//! Feeds Adam (epsilon 0) the gradient stream that drives its update ratio
//! to the closed-form maximum and compares the two.

use optikit::theory::{adam_ratio_bound, adversarial_sequence, simulate_adversarial_adam};

fn main() -> optikit::Result<()> {
    let (b1, b2) = (0.9, 0.999);
    println!(
        "first gradients: {:?}",
        adversarial_sequence(b1, b2, 1.0, 4)?
    );

    for steps in [100, 2_000, 10_000, 50_000] {
        let run = simulate_adversarial_adam(b1, b2, steps)?;
        println!(
            "steps {:>6}: sup |u| = {:.6}  bound at T = {:.6}  max violation = {:.2e}",
            steps,
            run.sup_ratio,
            adam_ratio_bound(b1, b2, Some(steps as u64))?,
            run.max_violation()
        );
    }
    println!("asymptotic bound: {:.6}", adam_ratio_bound(b1, b2, None)?);

    for (b1, b2) in [(0.9, 0.95), (0.9, 0.99), (0.95, 0.999), (0.99, 0.999)] {
        println!("({b1}, {b2}) -> {:.4}", adam_ratio_bound(b1, b2, None)?);
    }
    // the bound needs beta1^2 < beta2
    println!(
        "(0.95, 0.9) -> {}",
        adam_ratio_bound(0.95, 0.9, None).unwrap_err()
    );
    Ok(())
}
