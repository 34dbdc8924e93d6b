use std::collections::HashMap;

use num::{BigRational, One};

use super::{var_bit, Elementary, Expr, Kind};

impl Expr {
    /// Partial derivative with respect to the variable `var`.
    ///
    /// First derivatives of special functions rewrite through their
    /// defining ODE, so the result never carries derivative order above 1.
    pub fn diff(&self, var: &str) -> Expr {
        let bit = var_bit(var);
        let mut memo = HashMap::new();
        diff_rec(self, var, bit, &mut memo)
    }
}

fn diff_rec(e: &Expr, var: &str, bit: u64, memo: &mut HashMap<usize, Expr>) -> Expr {
    if e.mask() & bit == 0 {
        return Expr::zero();
    }
    if let Some(d) = memo.get(&e.ptr()) {
        return d.clone();
    }
    let out = match e.kind() {
        Kind::Const(_) => Expr::zero(),
        Kind::Var(s) => {
            if &**s == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Kind::Sum(ts) => Expr::add_all(ts.iter().map(|t| diff_rec(t, var, bit, memo))),
        Kind::Product(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let d = diff_rec(f, var, bit, memo);
                if d.is_zero() {
                    continue;
                }
                let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
                parts.extend(fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()));
                parts.push(d);
                terms.push(Expr::mul_all(parts));
            }
            Expr::add_all(terms)
        }
        Kind::Pow(b, k) => {
            let db = diff_rec(b, var, bit, memo);
            if db.is_zero() {
                Expr::zero()
            } else {
                Expr::mul_all([
                    Expr::constant(k.clone()),
                    Expr::pow(b, k - BigRational::one()),
                    db,
                ])
            }
        }
        Kind::Func(f, a) => {
            let da = diff_rec(a, var, bit, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match f {
                    Elementary::Exp => e.clone(),
                    Elementary::Ln => a.recip(),
                    Elementary::Sin => a.cos(),
                    Elementary::Cos => -a.sin(),
                };
                outer * da
            }
        }
        Kind::Special(f, o, a) => {
            let da = diff_rec(a, var, bit, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                Expr::special(f, o + 1, a.clone()) * da
            }
        }
    };
    memo.insert(e.ptr(), out.clone());
    out
}
