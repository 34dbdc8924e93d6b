//! Residual of the parametric general solutions of both examples.

use std::collections::HashMap;

use num::BigRational;
use sl2quad::cli::bundled;
use sl2quad::expr::{Expr, Symbol, Tape};
use sl2quad::numint::solution_residual;

fn main() {
    for name in ["airy", "schrodinger"] {
        let pf = bundled(name).unwrap();
        let sol = pf.solution.as_ref().unwrap();
        let consts: HashMap<Symbol, Expr> = sol
            .constants
            .iter()
            .map(|(n, v)| (Symbol::from(n.as_str()), Expr::constant(BigRational::from_float(*v).unwrap())))
            .collect();
        let curve = Tape::compile(&[sol.x.subs(&consts), sol.u.subs(&consts)], std::slice::from_ref(&sol.param), &pf.backend).unwrap();
        let phi = Tape::compile(std::slice::from_ref(&pf.phi), pf.coords.names(), &pf.backend).unwrap();
        for h in [1e-2, 5e-3, 2e-3] {
            let r = solution_residual(&curve, &phi, sol.span, 200, h, None).unwrap();
            println!("{name:<12} step {h:.0e}: max residual {:.2e} at s = {:.3}", r.max, r.worst_s);
        }
    }
}
