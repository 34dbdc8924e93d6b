//! Parse an expression, differentiate it, print and evaluate.

use sl2quad::expr::{parse_expr, Assignment, FunctionBackend, Scope};

fn main() {
    let scope = Scope::new(&["x", "u", "u1", "u2"]);
    let phi = parse_expr("3*u2^2/(2*u1) + u*u1^3", &scope).expect("valid expression");
    println!("phi        = {phi}");
    for v in ["u", "u1", "u2"] {
        println!("dphi/d{v:<3} = {}", phi.diff(v));
    }
    let at = Assignment::new().set("x", 1.0).set("u", 0.5).set("u1", 1.0).set("u2", -0.25);
    println!("phi(1, 1/2, 1, -1/4) = {}", phi.eval(&at, &FunctionBackend::new()).unwrap());
}
