//! Constancy drift of the closed-form first integrals along trajectories,
//! integrated at the file's tolerance and at half of it.

use sl2quad::cli::{bundled, halving_report, RunOptions, DEFAULT_SEED};

fn main() {
    for name in ["airy", "schrodinger"] {
        let pf = bundled(name).expect("bundled problem");
        let opts = RunOptions::new(DEFAULT_SEED);
        let tol = pf.trajectories.as_ref().map(|t| t.tol).unwrap_or(f64::NAN);
        for t in [tol, tol * 100.0, tol * 1e4] {
            let mut pf = pf.clone();
            if let Some(s) = pf.trajectories.as_mut() {
                s.tol = t;
            }
            let r = halving_report(&pf, &opts, None).expect("integration").expect("trajectories");
            println!(
                "{name:<12} tol {t:7.0e}  mean drift {:.3e}  at tol/2 {:.3e}  factor {:.2}",
                r.drift,
                r.drift_half,
                r.factor()
            );
        }
    }
}
