//! Loads a run config, applies overrides, runs it and writes the JSONL,
//! summary and CSV records.
//!
//! ```text
//! cargo run --example train -- configs/fig1_s3.json optimizer.p=2 seed=7
//! ```

use std::path::{Path, PathBuf};

use optikit::harness::{run, RunConfig};

fn main() -> optikit::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/fig1_s3.json"));
    let overrides: Vec<String> = args.collect();
    let cfg = RunConfig::load(&path)?.with_overrides(&overrides)?;
    let rec = run(&cfg)?;
    let out = std::env::temp_dir().join("optikit-train");
    for p in rec.write_all(&out, "run")? {
        println!("wrote {}", p.display());
    }
    println!(
        "{:?}, {} steps, final loss {:?}, digest {}",
        rec.status,
        rec.stats.len(),
        rec.final_loss,
        &rec.final_params_digest[..16]
    );
    Ok(())
}
