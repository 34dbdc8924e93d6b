//! F1, F2 from the first integrals and from the hbar functions, checked
//! against the defining relations.

use sl2quad::cli::{bundled, DEFAULT_SEED};
use sl2quad::sl2::{f_from_h, f_from_integrals, verify_tres, ReducedProblem};

fn main() {
    let pf = bundled("airy").unwrap();
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let (i1, i2) = (pf.fixture("I1").unwrap(), pf.fixture("I2").unwrap());
    let (f1, f2) = f_from_integrals(&p, i1, i2).unwrap();
    println!("F1 = {f1}\nF2 = {f2}");
    let r = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    let (g1, g2) = f_from_h(&r, pf.fixture("hbar1").unwrap(), pf.fixture("hbar2").unwrap()).unwrap();
    let agree = p.probe.equiv(&[f1.clone(), f2.clone()], &[g1, g2], 1e-8).unwrap();
    println!("from hbar vs from integrals: {:.2e}", agree.worst);
    for rec in verify_tres(&p, &f1, &f2, p.tol.structure).unwrap() {
        println!("{:<10} {:.2e}", rec.id, rec.residual);
    }
}
