//! Reduce the Airy-type equation by the scaling generator and list the
//! inherited C-infinity symmetries and their canonical representatives.

use sl2quad::cli::{bundled, DEFAULT_SEED};
use sl2quad::sl2::ReducedProblem;

fn main() {
    let pf = bundled("airy").unwrap();
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let r = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    println!("reduced equation: w1' = {}", r.reduction.phi_red);
    for i in 0..2 {
        println!("lambda{}  = {}", i + 1, r.inherited[i].lambda);
        println!("lambdaQ{} = {}", i + 1, r.lambda_q[i]);
        println!("X{}       = {}", i + 1, r.x_fields[i]);
    }
    println!("rho      = {}", r.rho);
    for rec in &r.records {
        println!("{:<26} {:.2e}  {}", rec.id, rec.residual, if rec.pass { "ok" } else { "FAIL" });
    }
}
