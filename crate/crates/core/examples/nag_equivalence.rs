//! The three Nesterov forms produce the same iterates once form I's point
//! is shifted back by `gamma * beta * m`.

use optikit::problems::{Fig1, Quadratic};
use optikit::theory::nag_equivalence_check;

fn main() -> optikit::Result<()> {
    let quad = Quadratic::with_condition(4, 100.0, 0.0)?;
    let fig1 = Fig1::new(0.0)?;
    for beta in [0.0, 0.5, 0.9, 0.99] {
        let a = nag_equivalence_check(&quad, beta, 0.01, 1000, 1e-9)?;
        let b = nag_equivalence_check(&fig1, beta, 1e-4, 1000, 1e-9)?;
        println!(
            "beta {beta:<4}  quadratic I/II {:.1e} II/III {:.1e}   toy I/II {:.1e} II/III {:.1e}",
            a.max_gap_i_ii, a.max_gap_ii_iii, b.max_gap_i_ii, b.max_gap_ii_iii
        );
    }
    Ok(())
}
