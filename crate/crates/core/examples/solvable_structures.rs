//! The two solvable structures, their omega forms and the closure ladder.

use sl2quad::cli::{bundled, DEFAULT_SEED};
use sl2quad::sl2::{build_structures, closure_ladder, omega_forms};

fn main() {
    let pf = bundled("schrodinger").unwrap();
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let (f1, f2) = sl2quad::sl2::f_from_integrals(&p, pf.fixture("I1").unwrap(), pf.fixture("I2").unwrap()).unwrap();
    let s = build_structures(&p, &f1, &f2, p.tol.structure).unwrap();
    let w = omega_forms(&s.first).unwrap();
    for (i, wi) in w.iter().enumerate() {
        println!("omega{} = {wi}\n", i + 1);
    }
    for rec in s.records.iter().chain(&closure_ladder(&p, &s.first, &w, p.tol.numeric).unwrap()) {
        println!("{:<24} {:.2e}  {}", rec.id, rec.residual, if rec.pass { "ok" } else { "FAIL" });
    }
}
