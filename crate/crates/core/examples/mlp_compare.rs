//! S3 with coupled weight decay against AdamW on the blob classifier, 20
//! seeds. Reads `configs/mlp_compare.json`.

use std::path::Path;

use optikit::harness::{sweep, SweepConfig};

fn main() -> optikit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mlp_compare.json");
    let cfg = SweepConfig::load(&path)?;
    let (_, report) = sweep(&cfg, 0)?;
    for v in &report.variants {
        println!(
            "{:<6} median final loss {:.3e}  unstable runs {}/{}  spikes {}",
            v.label,
            v.median_final_loss.unwrap_or(f64::NAN),
            v.unstable,
            v.runs,
            v.total_spikes
        );
    }
    if let Some(h) = report.head_to_head {
        println!(
            "{} <= {} on {}/{} seeds ({:.0}%)",
            h.first,
            h.second,
            h.first_wins,
            h.seeds,
            100.0 * h.win_fraction
        );
    }
    Ok(())
}
