use std::fmt::{self, Write};

use num::{BigRational, One, Signed};

use super::{rat, Expr, Kind};

// precedence: 1 sum / leading minus, 2 product, 3 power, 4 atom
fn prec(e: &Expr) -> u8 {
    match e.kind() {
        Kind::Const(c) => {
            if c.is_negative() {
                1
            } else if c.is_integer() {
                4
            } else {
                2
            }
        }
        Kind::Var(_) | Kind::Func(..) | Kind::Special(..) => 4,
        Kind::Pow(_, k) => {
            if k.is_negative() {
                2
            } else if *k == rat(1, 2) {
                4
            } else {
                3
            }
        }
        Kind::Product(fs) => match fs[0].as_const() {
            Some(c) if c.is_negative() => 1,
            _ => 2,
        },
        Kind::Sum(_) => 1,
    }
}

fn write_prec(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_rational(out: &mut String, c: &BigRational) {
    if c.is_integer() {
        write!(out, "{}", c.numer()).unwrap();
    } else {
        write!(out, "{}/{}", c.numer(), c.denom()).unwrap();
    }
}

fn write_pow(out: &mut String, b: &Expr, k: &BigRational) {
    if *k == rat(1, 2) {
        out.push_str("sqrt(");
        write_expr(out, b);
        out.push(')');
        return;
    }
    write_prec(out, b, 4);
    out.push('^');
    if k.is_integer() && !k.is_negative() {
        write_rational(out, k);
    } else {
        out.push('(');
        write_rational(out, k);
        out.push(')');
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.kind() {
        Kind::Const(c) => c.is_negative(),
        Kind::Product(fs) => fs[0].as_const().is_some_and(|c| c.is_negative()),
        _ => false,
    }
}

fn write_product(out: &mut String, fs: &[Expr]) {
    let (coeff, rest) = match fs[0].as_const() {
        Some(c) => (c.clone(), &fs[1..]),
        None => (BigRational::one(), fs),
    };
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for f in rest {
        match f.kind() {
            Kind::Pow(b, k) if k.is_negative() => den.push(Expr::pow(b, -k.clone())),
            _ => num.push(f.clone()),
        }
    }
    if coeff.is_negative() {
        out.push('-');
    }
    let p = coeff.numer().abs();
    let q = coeff.denom().clone();
    let mut first = true;
    if !p.is_one() || num.is_empty() {
        write!(out, "{p}").unwrap();
        first = false;
    }
    for f in &num {
        if !first {
            out.push('*');
        }
        first = false;
        write_prec(out, f, 3);
    }
    let ndens = den.len() + usize::from(!q.is_one());
    if ndens == 0 {
        return;
    }
    out.push('/');
    let single = ndens == 1 && (den.is_empty() || prec(&den[0]) >= 3);
    if !single {
        out.push('(');
    }
    let mut first = true;
    if !q.is_one() {
        write!(out, "{q}").unwrap();
        first = false;
    }
    for d in &den {
        if !first {
            out.push('*');
        }
        first = false;
        write_prec(out, d, 3);
    }
    if !single {
        out.push(')');
    }
}

pub(super) fn write_expr(out: &mut String, e: &Expr) {
    match e.kind() {
        Kind::Const(c) => write_rational(out, c),
        Kind::Var(s) => out.push_str(s),
        Kind::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
        Kind::Special(f, o, a) => {
            out.push_str(&f.name);
            if *o == 1 {
                out.push('\'');
            }
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
        Kind::Pow(b, k) => {
            if k.is_negative() {
                out.push_str("1/");
                let pos = Expr::pow(b, -k.clone());
                write_prec(out, &pos, 3);
            } else {
                write_pow(out, b, k);
            }
        }
        Kind::Product(fs) => write_product(out, fs),
        Kind::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if is_negative_term(t) {
                    out.push_str(if i == 0 { "-" } else { " - " });
                    let n = -t;
                    write_prec(out, &n, 2);
                } else {
                    if i > 0 {
                        out.push_str(" + ");
                    }
                    write_prec(out, t, 2);
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_fractions_and_powers() {
        let x = Expr::var("x");
        let u = Expr::var("u");
        assert_eq!((Expr::ratio(3, 2) * x.clone()).to_string(), "3*x/2");
        assert_eq!((x.clone() / u.powi(2)).to_string(), "x/u^2");
        assert_eq!((x.clone() - u.clone()).to_string(), "-u + x");
        assert_eq!(x.sqrt().recip().to_string(), "1/sqrt(x)");
        assert_eq!((Expr::one() / (Expr::int(2) * x.clone())).to_string(), "1/(2*x)");
        assert_eq!((-(x.clone() + u.clone())).to_string(), "-u - x");
        assert_eq!(((x.clone() + u.clone()) * x.exp()).to_string(), "exp(x)*(u + x)");
    }
}
