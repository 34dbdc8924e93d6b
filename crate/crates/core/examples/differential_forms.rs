//! Wedge products, contractions and exterior derivatives on J^2.

use sl2quad::expr::{parse_expr, Expr};
use sl2quad::jet::{CoordSystem, DifferentialForm, VectorField};

fn main() {
    let c = CoordSystem::jet("x", "u", 2);
    let s = c.scope();
    let e = |t: &str| parse_expr(t, &s).unwrap();
    let w = DifferentialForm::one_form(&c, &[e("u1"), e("-1"), Expr::zero(), Expr::zero()]);
    let dw = w.exterior_derivative().unwrap();
    println!("w        = {w}");
    println!("dw       = {dw}");
    println!("w ^ dw   = {}", w.wedge(&dw).unwrap());
    println!("d(dw)    = {}", dw.exterior_derivative().unwrap());
    let a = VectorField::from_named(&c, &[("x", Expr::one()), ("u", e("u1")), ("u1", e("u2")), ("u2", e("u*u1^3"))]).unwrap();
    println!("A _| w   = {}", w.pair(&a).unwrap());
    println!("A _| dw  = {}", dw.interior(&a).unwrap());
}
