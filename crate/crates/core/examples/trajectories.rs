//! Integrate the Schrodinger-type equation from a few initial conditions
//! and watch I1, I2, I3 stay constant.

use sl2quad::cli::{bundled, integrate};
use sl2quad::expr::Tape;
use sl2quad::numint::constancy_report;

fn main() {
    let pf = bundled("schrodinger").unwrap();
    let names = ["I1", "I2", "I3"];
    let exprs: Vec<_> = names.iter().map(|n| pf.fixture(n).unwrap().clone()).collect();
    let tape = Tape::compile(&exprs, pf.coords.names(), &pf.backend).unwrap();
    for ic in [[1.0, 0.4, 1.0, -0.3], [0.9, 0.36, 1.05, -0.25], [1.1, 0.44, 0.95, -0.35]] {
        let traj = integrate(&pf, &ic, 0.5, 1e-10).unwrap();
        print!("from {ic:?}: {} steps", traj.len());
        for (k, n) in names.iter().enumerate() {
            let d = constancy_report(|p| Ok(tape.eval(p)?[k]), &traj).unwrap();
            print!("  {n} drift {d:.1e}");
        }
        println!();
    }
}
