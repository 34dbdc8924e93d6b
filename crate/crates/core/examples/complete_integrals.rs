//! Complete sets of first integrals by each of the three methods, with a
//! numeric primitive standing in wherever no closed form is supplied.

use sl2quad::cli::{bundled, DEFAULT_SEED};
use sl2quad::sl2::{build_structures, complete_integral_set, f_from_integrals, omega_forms, Method, MethodInputs};

fn main() {
    let pf = bundled("airy").unwrap();
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let (i1, i2) = (pf.fixture("I1").unwrap().clone(), pf.fixture("I2").unwrap().clone());
    let f = f_from_integrals(&p, &i1, &i2).unwrap();
    let s = build_structures(&p, &f.0, &f.1, p.tol.structure).unwrap();
    let omegas = omega_forms(&s.first).unwrap();
    let point = [1.0, 0.4, 1.0, -0.3];
    for method in [Method::One, Method::Two, Method::Three] {
        let inputs = MethodInputs {
            f: Some(f.clone()),
            omegas: Some(omegas.clone()),
            i1: Some(i1.clone()),
            i2: Some(i2.clone()),
            theta3: pf.fixture("Theta3").cloned(),
            numeric_fallback: true,
            base: None,
        };
        let set = complete_integral_set(&p, method, &inputs).unwrap();
        println!("{method:?}: min sigma3/sigma1 = {:.2e}", set.min_ratio);
        for m in &set.members {
            println!("  {}  -> {:.10} at {point:?}", m.describe(), m.eval(&point).unwrap());
        }
    }
}
