//! Evaluates the averaged gradient-norm bound and its regime threshold.

use optikit::theory::{convergence_bound, ConvergenceBudget};

fn main() -> optikit::Result<()> {
    for t in [16, 256, 4096, 65536] {
        let r = convergence_bound(&ConvergenceBudget::unit(t))?;
        println!(
            "unit budget T = {t:>5}: bound {:.7}  terms {:.3?}",
            r.bound, r.terms
        );
    }

    let budget = ConvergenceBudget {
        l0: 2.0,
        l1: 0.5,
        r: 1.0,
        sigma: 0.1,
        f_gap: 3.0,
        grad1_norm: 4.0,
        d: 10,
        u_max: 1.0,
        steps: 100_000,
    };
    let r = convergence_bound(&budget)?;
    println!(
        "d = 10, L1 = 0.5: bound {:.4}, beta {:.4}, gamma {:.2e}, needs T >= {:.3e} (in regime: {})",
        r.bound, r.beta, r.gamma, r.regime_threshold, r.in_theorem_regime
    );
    Ok(())
}
