//! Symbolic expressions over jet coordinates.
//!
//! Expressions are immutable, reference counted trees. Every constructor
//! applies a small set of safe rewrites (flattening, constant folding,
//! merging of identical bases) so structurally equal inputs produce
//! structurally equal outputs. There is no rational-function normal form;
//! equivalence of expressions is decided numerically (see [`sample`]).

mod diff;
pub mod eval;
pub mod parse;
mod print;
pub mod sample;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub use eval::{Assignment, EvalError, FunctionBackend, SpecialEvaluator, Tape};
pub use parse::{parse_expr, ParseError, Scope};
pub use sample::{equiv_numeric, equiv_numeric_vec, rel_residual, Domain, EquivReport, Locus, Probe, SampleError, Sampler};

pub type Symbol = Arc<str>;

/// Exact rational helper.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Ln => "ln",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
        }
    }
}

/// A special function defined by `f'' = p(var) f' + q(var) f`.
///
/// Identity is the name: two special functions with the same name are the
/// same symbol. The defining ODE is only used to rewrite second derivatives.
#[derive(Debug)]
pub struct SpecialFn {
    pub name: Symbol,
    pub var: Symbol,
    pub p: Expr,
    pub q: Expr,
}

impl SpecialFn {
    pub fn new(name: &str, var: &str, p: Expr, q: Expr) -> Arc<SpecialFn> {
        Arc::new(SpecialFn {
            name: name.into(),
            var: var.into(),
            p,
            q,
        })
    }

    /// `f''(arg)` expressed through order 0 and 1 nodes.
    pub fn second_derivative(self: &Arc<Self>, arg: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(self.var.clone(), arg.clone());
        let p = self.p.subs(&m);
        let q = self.q.subs(&m);
        p * Expr::special(self, 1, arg.clone()) + q * Expr::special(self, 0, arg.clone())
    }
}

#[derive(Debug)]
pub enum Kind {
    Const(BigRational),
    Var(Symbol),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, BigRational),
    Func(Elementary, Expr),
    Special(Arc<SpecialFn>, u8, Expr),
}

#[derive(Debug)]
pub struct Node {
    kind: Kind,
    hash: u64,
    mask: u64,
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn hasher() -> std::collections::hash_map::DefaultHasher {
    std::collections::hash_map::DefaultHasher::new()
}

fn var_bit(name: &str) -> u64 {
    let mut h = hasher();
    name.hash(&mut h);
    1u64 << (h.finish() % 64)
}

impl Expr {
    fn from_kind(kind: Kind) -> Expr {
        let mut h = hasher();
        let mask;
        match &kind {
            Kind::Const(c) => {
                0u8.hash(&mut h);
                c.hash(&mut h);
                mask = 0;
            }
            Kind::Var(s) => {
                1u8.hash(&mut h);
                s.hash(&mut h);
                mask = var_bit(s);
            }
            Kind::Sum(ts) => {
                2u8.hash(&mut h);
                let mut m = 0;
                for t in ts {
                    h.write_u64(t.0.hash);
                    m |= t.0.mask;
                }
                mask = m;
            }
            Kind::Product(fs) => {
                3u8.hash(&mut h);
                let mut m = 0;
                for f in fs {
                    h.write_u64(f.0.hash);
                    m |= f.0.mask;
                }
                mask = m;
            }
            Kind::Pow(b, e) => {
                4u8.hash(&mut h);
                h.write_u64(b.0.hash);
                e.hash(&mut h);
                mask = b.0.mask;
            }
            Kind::Func(f, a) => {
                5u8.hash(&mut h);
                f.hash(&mut h);
                h.write_u64(a.0.hash);
                mask = a.0.mask;
            }
            Kind::Special(f, o, a) => {
                6u8.hash(&mut h);
                f.name.hash(&mut h);
                o.hash(&mut h);
                h.write_u64(a.0.hash);
                mask = a.0.mask;
            }
        }
        Expr(Arc::new(Node {
            kind,
            hash: h.finish(),
            mask,
        }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub(crate) fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub(crate) fn mask(&self) -> u64 {
        self.0.mask
    }

    pub fn constant(c: BigRational) -> Expr {
        Expr::from_kind(Kind::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(BigRational::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_kind(Kind::Var(name.into()))
    }

    pub fn var_sym(name: &Symbol) -> Expr {
        Expr::from_kind(Kind::Var(name.clone()))
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self.kind() {
            Kind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self.kind() {
            Kind::Var(s) => Some(s),
            _ => None,
        }
    }

    /// Sum with flattening, constant folding and collection of like terms.
    pub fn add_all(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut c = BigRational::zero();
        let mut items: Vec<(BigRational, Expr)> = Vec::new();
        let push = |t: Expr, c: &mut BigRational, items: &mut Vec<(BigRational, Expr)>| match t
            .kind()
        {
            Kind::Const(k) => *c += k,
            _ => items.push(split_coeff(&t)),
        };
        for t in terms {
            if let Kind::Sum(ts) = t.kind() {
                for s in ts {
                    push(s.clone(), &mut c, &mut items);
                }
            } else {
                push(t, &mut c, &mut items);
            }
        }
        items.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<Expr> = Vec::with_capacity(items.len() + 1);
        if !c.is_zero() {
            out.push(Expr::constant(c));
        }
        let mut i = 0;
        while i < items.len() {
            let mut k = items[i].0.clone();
            let mut j = i + 1;
            while j < items.len() && items[j].1 == items[i].1 {
                k += &items[j].0;
                j += 1;
            }
            if !k.is_zero() {
                out.push(with_coeff(k, &items[i].1));
            }
            i = j;
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_kind(Kind::Sum(out)),
        }
    }

    /// Product with flattening, constant folding and merging of equal bases.
    pub fn mul_all(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut c = BigRational::one();
        let mut items: Vec<(Expr, BigRational)> = Vec::new();
        for f in factors {
            match f.kind() {
                Kind::Const(k) => {
                    if k.is_zero() {
                        return Expr::zero();
                    }
                    c *= k;
                }
                Kind::Product(fs) => {
                    for g in fs {
                        match g.kind() {
                            Kind::Const(k) => c *= k,
                            _ => items.push(split_pow(g)),
                        }
                    }
                }
                _ => items.push(split_pow(&f)),
            }
        }
        for item in items.iter_mut() {
            if let Some((k, monic)) = monic_sum(&item.0) {
                if item.1.is_integer() {
                    if let Some(n) = item.1.to_integer().to_i32() {
                        c *= num::pow::Pow::pow(&k, n);
                        item.0 = monic;
                    }
                }
            }
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<Expr> = Vec::with_capacity(items.len());
        let mut again = false;
        let mut i = 0;
        while i < items.len() {
            let mut e = items[i].1.clone();
            let mut j = i + 1;
            while j < items.len() && items[j].0 == items[i].0 {
                e += &items[j].1;
                j += 1;
            }
            if j > i + 1 || !e.is_one() {
                let p = Expr::pow(&items[i].0, e);
                match p.kind() {
                    Kind::Const(k) => {
                        if k.is_zero() {
                            return Expr::zero();
                        }
                        c *= k;
                    }
                    Kind::Product(_) => {
                        again = true;
                        merged.push(p);
                    }
                    _ => merged.push(p),
                }
            } else {
                merged.push(items[i].0.clone());
            }
            i = j;
        }
        if again {
            let mut all = merged;
            all.push(Expr::constant(c));
            return Expr::mul_all(all);
        }
        if merged.is_empty() {
            return Expr::constant(c);
        }
        if c.is_one() && merged.len() == 1 {
            return merged.pop().unwrap();
        }
        if merged.len() == 1 {
            // a constant times a sum distributes, so that -S and S cancel
            if let Kind::Sum(ts) = merged[0].kind() {
                return Expr::add_all(ts.iter().map(|t| Expr::mul_all([Expr::constant(c.clone()), t.clone()])));
            }
        }
        let mut out = Vec::with_capacity(merged.len() + 1);
        if !c.is_one() {
            out.push(Expr::constant(c));
        }
        out.extend(merged);
        Expr::from_kind(Kind::Product(out))
    }

    /// `b^e` with safe simplifications only.
    pub fn pow(b: &Expr, e: BigRational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return b.clone();
        }
        let int = e.is_integer();
        match b.kind() {
            Kind::Const(k) => {
                if k.is_one() {
                    return Expr::one();
                }
                if int && !(k.is_zero() && e.is_negative()) {
                    if let Some(n) = e.to_integer().to_i32() {
                        if n.unsigned_abs() <= 512 {
                            return Expr::constant(num::pow::Pow::pow(k, n));
                        }
                    }
                }
            }
            Kind::Pow(c, f) if int => return Expr::pow(c, f * &e),
            Kind::Product(fs) if int => {
                return Expr::mul_all(fs.iter().map(|f| Expr::pow(f, e.clone())));
            }
            _ => {}
        }
        Expr::from_kind(Kind::Pow(b.clone(), e))
    }

    pub fn powi(&self, n: i64) -> Expr {
        Expr::pow(self, BigRational::from_integer(n.into()))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Expr {
        Expr::pow(self, rat(1, 2))
    }

    pub fn func(f: Elementary, a: Expr) -> Expr {
        if let Some(k) = a.as_const() {
            match f {
                Elementary::Exp | Elementary::Cos if k.is_zero() => return Expr::one(),
                Elementary::Sin if k.is_zero() => return Expr::zero(),
                Elementary::Ln if k.is_one() => return Expr::zero(),
                _ => {}
            }
        }
        Expr::from_kind(Kind::Func(f, a))
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Elementary::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Elementary::Ln, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Elementary::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Elementary::Cos, self.clone())
    }

    /// Special function node; order must be 0 or 1, higher orders rewrite
    /// through the defining ODE.
    pub fn special(f: &Arc<SpecialFn>, order: u8, arg: Expr) -> Expr {
        match order {
            0 | 1 => Expr::from_kind(Kind::Special(f.clone(), order, arg)),
            2 => f.second_derivative(&arg),
            _ => panic!("special function derivative order {order} is not supported"),
        }
    }

    /// Wronskian `f g' - f' g` evaluated at `arg`.
    pub fn wronskian(f: &Arc<SpecialFn>, g: &Arc<SpecialFn>, arg: &Expr) -> Expr {
        Expr::special(f, 0, arg.clone()) * Expr::special(g, 1, arg.clone())
            - Expr::special(f, 1, arg.clone()) * Expr::special(g, 0, arg.clone())
    }

    /// Substitute variables by expressions (simultaneously).
    pub fn subs(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mask = map.keys().fold(0u64, |m, k| m | var_bit(k));
        let mut memo = HashMap::new();
        self.subs_rec(map, mask, &mut memo)
    }

    fn subs_rec(&self, map: &HashMap<Symbol, Expr>, mask: u64, memo: &mut HashMap<usize, Expr>) -> Expr {
        if self.mask() & mask == 0 {
            return self.clone();
        }
        if let Some(e) = memo.get(&self.ptr()) {
            return e.clone();
        }
        let out = match self.kind() {
            Kind::Const(_) => self.clone(),
            Kind::Var(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Kind::Sum(ts) => Expr::add_all(ts.iter().map(|t| t.subs_rec(map, mask, memo))),
            Kind::Product(fs) => Expr::mul_all(fs.iter().map(|t| t.subs_rec(map, mask, memo))),
            Kind::Pow(b, e) => Expr::pow(&b.subs_rec(map, mask, memo), e.clone()),
            Kind::Func(f, a) => Expr::func(*f, a.subs_rec(map, mask, memo)),
            Kind::Special(f, o, a) => Expr::special(f, *o, a.subs_rec(map, mask, memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    pub fn subs1(&self, name: &str, value: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(Symbol::from(name), value.clone());
        self.subs(&m)
    }

    /// Free variables, sorted by name.
    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        self.collect_vars(&mut out, &mut seen);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Symbol>, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(self.ptr()) {
            return;
        }
        match self.kind() {
            Kind::Const(_) => {}
            Kind::Var(s) => {
                out.insert(s.clone());
            }
            Kind::Sum(xs) | Kind::Product(xs) => xs.iter().for_each(|x| x.collect_vars(out, seen)),
            Kind::Pow(b, _) => b.collect_vars(out, seen),
            Kind::Func(_, a) | Kind::Special(_, _, a) => a.collect_vars(out, seen),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.mask() & var_bit(var) != 0 && self.free_vars().iter().any(|v| &**v == var)
    }

    /// Special functions referenced anywhere in the tree, keyed by name.
    pub fn specials(&self) -> Vec<Arc<SpecialFn>> {
        let mut out: Vec<Arc<SpecialFn>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        self.collect_specials(&mut out, &mut seen);
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }

    fn collect_specials(&self, out: &mut Vec<Arc<SpecialFn>>, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(self.ptr()) {
            return;
        }
        match self.kind() {
            Kind::Const(_) | Kind::Var(_) => {}
            Kind::Sum(xs) | Kind::Product(xs) => xs.iter().for_each(|x| x.collect_specials(out, seen)),
            Kind::Pow(b, _) => b.collect_specials(out, seen),
            Kind::Func(_, a) => a.collect_specials(out, seen),
            Kind::Special(f, _, a) => {
                if !out.iter().any(|g| g.name == f.name) {
                    out.push(f.clone());
                }
                a.collect_specials(out, seen);
            }
        }
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.kind() {
                Kind::Const(_) | Kind::Var(_) => {}
                Kind::Sum(xs) | Kind::Product(xs) => xs.iter().for_each(|x| walk(x, seen)),
                Kind::Pow(b, _) => walk(b, seen),
                Kind::Func(_, a) | Kind::Special(_, _, a) => walk(a, seen),
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// True if no floating point value can appear anywhere: every constant is
    /// stored as an exact rational by construction, so this checks the
    /// structural invariant that constants are rationals.
    pub fn constants(&self) -> Vec<BigRational> {
        let mut out = Vec::new();
        fn walk(e: &Expr, out: &mut Vec<BigRational>) {
            match e.kind() {
                Kind::Const(c) => out.push(c.clone()),
                Kind::Var(_) => {}
                Kind::Sum(xs) | Kind::Product(xs) => xs.iter().for_each(|x| walk(x, out)),
                Kind::Pow(b, e) => {
                    walk(b, out);
                    out.push(e.clone());
                }
                Kind::Func(_, a) | Kind::Special(_, _, a) => walk(a, out),
            }
        }
        walk(self, &mut out);
        out
    }
}

fn split_coeff(t: &Expr) -> (BigRational, Expr) {
    if let Kind::Product(fs) = t.kind() {
        if let Kind::Const(k) = fs[0].kind() {
            let rest = if fs.len() == 2 {
                fs[1].clone()
            } else {
                Expr::from_kind(Kind::Product(fs[1..].to_vec()))
            };
            return (k.clone(), rest);
        }
    }
    (BigRational::one(), t.clone())
}

fn with_coeff(k: BigRational, rest: &Expr) -> Expr {
    if k.is_one() {
        return rest.clone();
    }
    let mut fs = vec![Expr::constant(k)];
    match rest.kind() {
        Kind::Product(gs) => fs.extend(gs.iter().cloned()),
        _ => fs.push(rest.clone()),
    }
    Expr::from_kind(Kind::Product(fs))
}

// For a sum whose leading non-constant coefficient k is not 1, returns
// (k, sum / k) so that sums appearing as factors are normalized.
fn monic_sum(e: &Expr) -> Option<(BigRational, Expr)> {
    let Kind::Sum(ts) = e.kind() else { return None };
    let lead = ts.iter().find(|t| t.as_const().is_none())?;
    let (k, _) = split_coeff(lead);
    if k.is_one() {
        return None;
    }
    let inv = Expr::constant(k.recip());
    let monic = Expr::add_all(ts.iter().map(|t| Expr::mul_all([inv.clone(), t.clone()])));
    Some((k, monic))
}

fn split_pow(f: &Expr) -> (Expr, BigRational) {
    match f.kind() {
        Kind::Pow(b, e) => (b.clone(), e.clone()),
        _ => (f.clone(), BigRational::one()),
    }
}

fn rank(k: &Kind) -> u8 {
    match k {
        Kind::Const(_) => 0,
        Kind::Var(_) => 1,
        Kind::Pow(..) => 2,
        Kind::Func(..) => 3,
        Kind::Special(..) => 4,
        Kind::Product(_) => 5,
        Kind::Sum(_) => 6,
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (a, b) = (self.kind(), other.kind());
        let r = rank(a).cmp(&rank(b));
        if r != Ordering::Equal {
            return r;
        }
        match (a, b) {
            (Kind::Const(x), Kind::Const(y)) => x.cmp(y),
            (Kind::Var(x), Kind::Var(y)) => x.cmp(y),
            (Kind::Sum(x), Kind::Sum(y)) | (Kind::Product(x), Kind::Product(y)) => x.cmp(y),
            (Kind::Pow(b1, e1), Kind::Pow(b2, e2)) => b1.cmp(b2).then_with(|| e1.cmp(e2)),
            (Kind::Func(f1, a1), Kind::Func(f2, a2)) => f1.cmp(f2).then_with(|| a1.cmp(a2)),
            (Kind::Special(f1, o1, a1), Kind::Special(f2, o2, a2)) => f1
                .name
                .cmp(&f2.name)
                .then_with(|| a1.cmp(a2))
                .then_with(|| o1.cmp(o2)),
            _ => unreachable!(),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.cmp(other) == Ordering::Equal)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl std::ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::int(rhs))
            }
        }
        impl std::ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::int(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add_all([a, b]));
binop!(Sub, sub, |a, b| Expr::add_all([a, Expr::mul_all([Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| Expr::mul_all([a, b]));
binop!(Div, div, |a, b| Expr::mul_all([a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self])
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self.clone()])
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::add_all(iter)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::mul_all(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn like_terms_collect() {
        let e = x() + x() * 2 - Expr::int(3) * x();
        assert!(e.is_zero());
        let e = x() * x().recip();
        assert!(e.is_one());
    }

    #[test]
    fn constants_fold_exactly() {
        let e = Expr::ratio(1, 3) + Expr::ratio(1, 6);
        assert_eq!(e.as_const().unwrap(), &rat(1, 2));
        let e = Expr::ratio(2, 3).powi(3);
        assert_eq!(e.as_const().unwrap(), &rat(8, 27));
    }

    #[test]
    fn products_merge_bases() {
        let u = Expr::var("u");
        let e = u.powi(2) * u.powi(-3) * x();
        assert_eq!(e, x() / u.clone());
        let s = u.sqrt() * u.sqrt();
        assert_eq!(s, u);
    }

    #[test]
    fn integer_power_of_product_distributes() {
        let u = Expr::var("u");
        let e = (x() * u.clone()).powi(2);
        assert_eq!(e, x().powi(2) * u.powi(2));
        let e = (x() * u.clone()).sqrt().powi(2);
        assert_eq!(e, x() * u);
    }

    #[test]
    fn elementary_constants() {
        assert!(Expr::zero().exp().is_one());
        assert!(Expr::one().ln().is_zero());
    }

    #[test]
    fn equality_is_structural() {
        let a = Expr::var("u") + x();
        let b = x() + Expr::var("u");
        assert_eq!(a, b);
        assert_ne!(a, x());
    }

    #[test]
    fn substitution() {
        let e = x().powi(2) + Expr::var("u");
        let r = e.subs1("x", &Expr::int(3));
        assert_eq!(r, Expr::int(9) + Expr::var("u"));
    }
}
