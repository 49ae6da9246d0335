//! Warmup plus cosine decay, and the weight decay that keeps `lr * wd`
//! fixed when moving from AdamW to another optimizer.

use optikit::harness::{coupled_weight_decay, Schedule};

fn main() -> optikit::Result<()> {
    let s = Schedule::warmup_cosine(1e-3, 100, 1000, 0.1)?;
    for step in [0, 50, 100, 250, 500, 750, 1000] {
        println!("step {step:>4}: lr {:.3e}", s.lr_at(step)?);
    }
    let wd = coupled_weight_decay(1e-3, 0.1, 3e-4)?;
    println!("AdamW lr 1e-3, wd 0.1 -> wd {wd:.4} at lr 3e-4");
    Ok(())
}
