//! Runs SGD, SignSGD, Adam and S3 on the two-dimensional toy loss and
//! writes one trajectory CSV per optimizer.
//!
//! ```text
//! cargo run --release --example fig1 -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use optikit::harness::fig1::{write_fig1, FIG1_STEPS};

fn main() -> optikit::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("optikit-fig1"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let (records, paths) = write_fig1(&out, seed, FIG1_STEPS)?;
    println!(
        "{:<8} {:>8} {:>14} {:>7} {:>10}",
        "opt", "lr", "final_loss", "spikes", "peak|u|"
    );
    let labels = ["sgd", "signsgd", "adam", "s3"];
    for (label, rec) in labels.iter().zip(&records) {
        println!(
            "{:<8} {:>8.0e} {:>14.3e} {:>7} {:>10.3}",
            label,
            rec.config.schedule.peak_lr,
            rec.final_loss.unwrap_or(f64::NAN),
            rec.spikes.len(),
            rec.peak_update()
        );
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}
