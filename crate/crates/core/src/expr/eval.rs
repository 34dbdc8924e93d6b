//! Numeric evaluation: expressions compile to a flat tape of operations over
//! a fixed variable order. Shared subtrees are evaluated once.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::{BigRational, ToPrimitive};

use super::{Elementary, Expr, Kind, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("`{name}` evaluated at {at} outside its interval [{lo}, {hi}]")]
    OutOfInterval { name: String, at: f64, lo: f64, hi: f64 },
    #[error("non-finite result")]
    NonFinite,
    #[error("unbound coordinate `{0}`")]
    Unbound(String),
    #[error("no evaluator registered for `{0}`")]
    UnknownFunction(String),
    #[error("special-function backend failed: {0}")]
    Backend(String),
}

/// Numeric realization of a special function: value and first derivative.
pub trait SpecialEvaluator: Send + Sync {
    fn eval(&self, t: f64) -> Result<(f64, f64), EvalError>;
    fn interval(&self) -> (f64, f64);
}

/// Evaluator from a pair of closures, for functions known in closed form.
pub struct ClosedForm<F: Fn(f64) -> (f64, f64) + Send + Sync> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
    pub name: String,
}

impl<F: Fn(f64) -> (f64, f64) + Send + Sync> SpecialEvaluator for ClosedForm<F> {
    fn eval(&self, t: f64) -> Result<(f64, f64), EvalError> {
        if !(self.lo..=self.hi).contains(&t) {
            return Err(EvalError::OutOfInterval {
                name: self.name.clone(),
                at: t,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok((self.f)(t))
    }
    fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Clone, Default)]
pub struct FunctionBackend {
    map: BTreeMap<String, Arc<dyn SpecialEvaluator>>,
}

impl FunctionBackend {
    pub fn new() -> FunctionBackend {
        FunctionBackend::default()
    }

    pub fn insert(&mut self, name: &str, ev: Arc<dyn SpecialEvaluator>) {
        self.map.insert(name.to_string(), ev);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn SpecialEvaluator>> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }
}

impl std::fmt::Debug for FunctionBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.map.keys()).finish()
    }
}

/// Coordinate values by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment(pub BTreeMap<Symbol, f64>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn set(mut self, name: &str, v: f64) -> Assignment {
        self.0.insert(name.into(), v);
        self
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, f64)]) -> Assignment {
        Assignment(pairs.iter().map(|(k, v)| (Symbol::from(k.as_ref()), *v)).collect())
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Sum(Box<[usize]>),
    Prod(Box<[usize]>),
    Powi(usize, i32),
    Powf(usize, f64),
    Sqrt(usize),
    Exp(usize),
    Ln(usize),
    Sin(usize),
    Cos(usize),
    Special { f: usize, order: u8, arg: usize },
}

/// Compiled multi-output evaluator.
#[derive(Clone)]
pub struct Tape {
    vars: Vec<Symbol>,
    ops: Vec<Op>,
    outputs: Vec<usize>,
    specials: Vec<Arc<dyn SpecialEvaluator>>,
}

struct Compiler<'a> {
    vars: &'a [Symbol],
    backend: &'a FunctionBackend,
    ops: Vec<Op>,
    memo: HashMap<Expr, usize>,
    specials: Vec<Arc<dyn SpecialEvaluator>>,
    special_idx: HashMap<String, usize>,
}

fn to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

impl Compiler<'_> {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn node(&mut self, e: &Expr) -> Result<usize, EvalError> {
        if let Some(&i) = self.memo.get(e) {
            return Ok(i);
        }
        let op = match e.kind() {
            Kind::Const(c) => Op::Const(to_f64(c)),
            Kind::Var(s) => match self.vars.iter().position(|v| v == s) {
                Some(i) => Op::Var(i),
                None => return Err(EvalError::Unbound(s.to_string())),
            },
            Kind::Sum(ts) => {
                let idx = ts.iter().map(|t| self.node(t)).collect::<Result<Vec<_>, _>>()?;
                Op::Sum(idx.into())
            }
            Kind::Product(fs) => {
                let idx = fs.iter().map(|t| self.node(t)).collect::<Result<Vec<_>, _>>()?;
                Op::Prod(idx.into())
            }
            Kind::Pow(b, k) => {
                let bi = self.node(b)?;
                if k.is_integer() && k.to_integer().to_i32().is_some() {
                    Op::Powi(bi, k.to_integer().to_i32().unwrap())
                } else if *k == super::rat(1, 2) {
                    Op::Sqrt(bi)
                } else {
                    Op::Powf(bi, to_f64(k))
                }
            }
            Kind::Func(f, a) => {
                let ai = self.node(a)?;
                match f {
                    Elementary::Exp => Op::Exp(ai),
                    Elementary::Ln => Op::Ln(ai),
                    Elementary::Sin => Op::Sin(ai),
                    Elementary::Cos => Op::Cos(ai),
                }
            }
            Kind::Special(f, o, a) => {
                let ai = self.node(a)?;
                let fi = match self.special_idx.get(&*f.name) {
                    Some(&i) => i,
                    None => {
                        let ev = self
                            .backend
                            .get(&f.name)
                            .ok_or_else(|| EvalError::UnknownFunction(f.name.to_string()))?
                            .clone();
                        self.specials.push(ev);
                        self.special_idx.insert(f.name.to_string(), self.specials.len() - 1);
                        self.specials.len() - 1
                    }
                };
                Op::Special {
                    f: fi,
                    order: *o,
                    arg: ai,
                }
            }
        };
        let i = self.push(op);
        self.memo.insert(e.clone(), i);
        Ok(i)
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr], vars: &[Symbol], backend: &FunctionBackend) -> Result<Tape, EvalError> {
        let mut c = Compiler {
            vars,
            backend,
            ops: Vec::new(),
            memo: HashMap::new(),
            specials: Vec::new(),
            special_idx: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| c.node(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            vars: vars.to_vec(),
            ops: c.ops,
            outputs,
            specials: c.specials,
        })
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(point, &mut regs, &mut out)?;
        Ok(out)
    }

    pub fn eval1(&self, point: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval(point)?[0])
    }

    pub fn eval_into(&self, point: &[f64], regs: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        regs.clear();
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(i) => point[*i],
                Op::Sum(xs) => xs.iter().map(|&i| regs[i]).sum(),
                Op::Prod(xs) => xs.iter().map(|&i| regs[i]).product(),
                Op::Powi(b, n) => {
                    let x = regs[*b];
                    if x == 0.0 && *n < 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.powi(*n)
                }
                Op::Sqrt(b) => {
                    let x = regs[*b];
                    if x < 0.0 {
                        return Err(EvalError::Domain("square root of a negative value"));
                    }
                    x.sqrt()
                }
                Op::Powf(b, k) => {
                    let x = regs[*b];
                    if x < 0.0 {
                        return Err(EvalError::Domain("fractional power of a negative value"));
                    }
                    if x == 0.0 && *k < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.powf(*k)
                }
                Op::Exp(a) => regs[*a].exp(),
                Op::Ln(a) => {
                    let x = regs[*a];
                    if x <= 0.0 {
                        return Err(EvalError::Domain("logarithm of a nonpositive value"));
                    }
                    x.ln()
                }
                Op::Sin(a) => regs[*a].sin(),
                Op::Cos(a) => regs[*a].cos(),
                Op::Special { f, order, arg } => {
                    let (v, d) = self.specials[*f].eval(regs[*arg])?;
                    if *order == 0 {
                        v
                    } else {
                        d
                    }
                }
            };
            regs.push(v);
        }
        for (o, &i) in out.iter_mut().zip(&self.outputs) {
            let v = regs[i];
            if !v.is_finite() {
                return Err(EvalError::NonFinite);
            }
            *o = v;
        }
        Ok(())
    }
}

impl Expr {
    /// One-shot evaluation at an assignment.
    pub fn eval(&self, a: &Assignment, b: &FunctionBackend) -> Result<f64, EvalError> {
        let vars: Vec<Symbol> = a.0.keys().cloned().collect();
        let tape = Tape::compile(std::slice::from_ref(self), &vars, b)?;
        let point: Vec<f64> = a.0.values().copied().collect();
        tape.eval1(&point)
    }

    pub fn eval_plain(&self, a: &Assignment) -> Result<f64, EvalError> {
        self.eval(a, &FunctionBackend::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};

    fn s() -> Scope {
        Scope::new(&["x", "u", "u1", "u2", "w", "w1"])
    }

    #[test]
    fn arithmetic() {
        let e = parse_expr("u1 + x*u2", &s()).unwrap();
        let a = Assignment::from_pairs(&[("x", 2.0), ("u1", 1.0), ("u2", 3.0)]);
        assert_eq!(e.eval_plain(&a).unwrap(), 7.0);
        let e = parse_expr("w^2 - w1", &s()).unwrap();
        let a = Assignment::from_pairs(&[("w", 1.0), ("w1", 1.0)]);
        assert_eq!(e.eval_plain(&a).unwrap(), 0.0);
    }

    #[test]
    fn omega_coefficient_hand_value() {
        let e = parse_expr("(2*u1*u2 + x*u2^2 - 2*x*u*u1^4)/(2*u1^3)", &s()).unwrap();
        let a = Assignment::from_pairs(&[("x", 1.0), ("u", 0.0), ("u1", 1.0), ("u2", 2.0)]);
        assert_eq!(e.eval_plain(&a).unwrap(), 4.0);
    }

    #[test]
    fn errors() {
        let a = Assignment::from_pairs(&[("x", 0.0)]);
        assert_eq!(parse_expr("1/x", &s()).unwrap().eval_plain(&a), Err(EvalError::DivisionByZero));
        assert!(matches!(parse_expr("ln(x)", &s()).unwrap().eval_plain(&a), Err(EvalError::Domain(_))));
        let a = Assignment::from_pairs(&[("x", -1.0)]);
        assert!(matches!(parse_expr("sqrt(x)", &s()).unwrap().eval_plain(&a), Err(EvalError::Domain(_))));
        assert!(matches!(
            parse_expr("u", &s()).unwrap().eval_plain(&a),
            Err(EvalError::Unbound(_))
        ));
    }

    #[test]
    fn special_out_of_interval() {
        let f = crate::expr::SpecialFn::new("E", "t", Expr::zero(), Expr::one());
        let mut b = FunctionBackend::new();
        b.insert(
            "E",
            Arc::new(ClosedForm {
                f: |t: f64| (t.exp(), t.exp()),
                lo: -1.0,
                hi: 1.0,
                name: "E".into(),
            }),
        );
        let e = Expr::special(&f, 1, Expr::var("x"));
        let ok = e.eval(&Assignment::new().set("x", 0.5), &b).unwrap();
        assert!((ok - 0.5f64.exp()).abs() < 1e-15);
        assert!(matches!(
            e.eval(&Assignment::new().set("x", 2.0), &b),
            Err(EvalError::OutOfInterval { .. })
        ));
    }
}
