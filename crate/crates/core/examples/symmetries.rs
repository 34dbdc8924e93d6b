//! Prolong the sl(2,R) generators of the Airy-type equation, check their
//! brackets and the symmetry condition.

use sl2quad::cli::{bundled, DEFAULT_SEED};
use sl2quad::jet::lie_bracket;
use sl2quad::sl2::check_sl2_relations;

fn main() {
    let pf = bundled("airy").unwrap();
    let p = pf.problem(DEFAULT_SEED).unwrap();
    println!("A = {}", p.a);
    for i in 0..3 {
        println!("v{} = {}", i + 1, p.gens[i]);
        println!("  prolonged: {}", p.prolonged(i, 2).unwrap());
    }
    println!("[v1, v2] = {}", lie_bracket(&p.gens[0], &p.gens[1]).unwrap());
    let rel = check_sl2_relations(&p.gens, &p.probe, p.tol.relations).unwrap();
    for r in rel.records.iter().chain(&p.symmetry_checks().unwrap()) {
        println!("{:<14} residual {:.2e}  pass {}", r.id, r.residual, r.pass);
    }
}
