//! Numeric fundamental pairs of `f'' = p(t) f' + q(t) f`.

use std::cell::RefCell;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::expr::{EvalError, Expr, FunctionBackend, SpecialEvaluator, SpecialFn, Symbol, Tape};

use super::rk::{dopri5, RkOptions};
use super::NumError;

/// Second-order linear ODE `f'' = p f' + q f` with a fundamental pair fixed
/// by initial data at `anchor`.
#[derive(Clone, Debug)]
pub struct LinearOdeSpec {
    pub var: Symbol,
    pub p: Expr,
    pub q: Expr,
    pub anchor: f64,
    /// `(f(anchor), f'(anchor))` for each member.
    pub ics: [(f64, f64); 2],
    pub interval: (f64, f64),
    pub names: [String; 2],
}

impl LinearOdeSpec {
    /// The pair's symbols, for building expressions.
    pub fn symbols(&self) -> [Arc<SpecialFn>; 2] {
        [
            SpecialFn::new(&self.names[0], &self.var, self.p.clone(), self.q.clone()),
            SpecialFn::new(&self.names[1], &self.var, self.p.clone(), self.q.clone()),
        ]
    }

    pub fn initial_wronskian(&self) -> f64 {
        self.ics[0].0 * self.ics[1].1 - self.ics[0].1 * self.ics[1].0
    }
}

// node grid tolerance and local re-integration tolerance
const NODE_TOL: f64 = 1e-12;
const LOCAL_TOL: f64 = 1e-13;

static NEXT_ID: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static CACHE: RefCell<Vec<(usize, u64, [f64; 4])>> = const { RefCell::new(Vec::new()) };
}

pub struct FundamentalPair {
    spec: LinearOdeSpec,
    coeffs: Tape,
    // sorted by t
    nodes: Vec<(f64, [f64; 4])>,
    id: usize,
}

impl std::fmt::Debug for FundamentalPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FundamentalPair")
            .field("names", &self.spec.names)
            .field("interval", &self.spec.interval)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

fn rhs(coeffs: &Tape, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
    let pq = coeffs.eval(&[t])?;
    for m in 0..2 {
        out[2 * m] = y[2 * m + 1];
        out[2 * m + 1] = pq[0] * y[2 * m + 1] + pq[1] * y[2 * m];
    }
    Ok(())
}

impl FundamentalPair {
    pub fn new(spec: LinearOdeSpec) -> Result<Arc<FundamentalPair>, NumError> {
        let (lo, hi) = spec.interval;
        if !(lo < hi) || !(lo..=hi).contains(&spec.anchor) {
            return Err(NumError::Setup(format!(
                "anchor {} not inside the interval [{lo}, {hi}]",
                spec.anchor
            )));
        }
        if spec.initial_wronskian().abs() < 1e-300 {
            return Err(NumError::Setup("initial conditions are linearly dependent".into()));
        }
        for e in [&spec.p, &spec.q] {
            if let Some(v) = e.free_vars().into_iter().find(|v| **v != *spec.var) {
                return Err(NumError::Setup(format!("coefficient depends on `{v}`")));
            }
        }
        let coeffs = Tape::compile(&[spec.p.clone(), spec.q.clone()], std::slice::from_ref(&spec.var), &FunctionBackend::new())?;
        let m = 400;
        for i in 0..=m {
            let t = lo + (hi - lo) * i as f64 / m as f64;
            match coeffs.eval(&[t]) {
                Ok(v) if v.iter().all(|c| c.is_finite()) => {}
                _ => {
                    return Err(NumError::Singular(format!(
                        "coefficients of the `{}` equation are singular near {t} in [{lo}, {hi}]",
                        spec.names[0]
                    )))
                }
            }
        }
        let y0 = [spec.ics[0].0, spec.ics[0].1, spec.ics[1].0, spec.ics[1].1];
        let opts = RkOptions {
            hmax: Some((hi - lo) / 64.0),
            ..RkOptions::tol(NODE_TOL)
        };
        let f = |t: f64, y: &[f64], out: &mut [f64]| rhs(&coeffs, t, y, out);
        let back = dopri5(f, spec.anchor, &y0, lo, &opts)?;
        let fwd = dopri5(f, spec.anchor, &y0, hi, &opts)?;
        let mut nodes: Vec<(f64, [f64; 4])> = Vec::new();
        for i in (1..back.len()).rev() {
            nodes.push((back.xs[i], to4(&back.ys[i])));
        }
        for i in 0..fwd.len() {
            nodes.push((fwd.xs[i], to4(&fwd.ys[i])));
        }
        Ok(Arc::new(FundamentalPair {
            spec,
            coeffs,
            nodes,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }))
    }

    pub fn spec(&self) -> &LinearOdeSpec {
        &self.spec
    }

    /// `[f1, f1', f2, f2']` at `t`.
    pub fn state(&self, t: f64) -> Result<[f64; 4], EvalError> {
        let (lo, hi) = self.spec.interval;
        if !(lo..=hi).contains(&t) {
            return Err(EvalError::OutOfInterval {
                name: self.spec.names[0].clone(),
                at: t,
                lo,
                hi,
            });
        }
        let key = t.to_bits();
        if let Some(v) = CACHE.with(|c| c.borrow().iter().find(|e| e.0 == self.id && e.1 == key).map(|e| e.2)) {
            return Ok(v);
        }
        let k = self.nodes.partition_point(|n| n.0 < t);
        let nearest = match k {
            0 => 0,
            k if k >= self.nodes.len() => self.nodes.len() - 1,
            k => {
                if t - self.nodes[k - 1].0 <= self.nodes[k].0 - t {
                    k - 1
                } else {
                    k
                }
            }
        };
        let (t0, y0) = self.nodes[nearest];
        let v = if t0 == t {
            y0
        } else {
            let opts = RkOptions {
                h0: Some((t - t0).abs()),
                ..RkOptions::tol(LOCAL_TOL)
            };
            let f = |s: f64, y: &[f64], out: &mut [f64]| rhs(&self.coeffs, s, y, out);
            let tr = dopri5(f, t0, &y0, t, &opts).map_err(|e| EvalError::Backend(e.to_string()))?;
            to4(tr.last().1)
        };
        CACHE.with(|c| {
            let mut c = c.borrow_mut();
            if c.len() >= 32 {
                c.remove(0);
            }
            c.push((self.id, key, v));
        });
        Ok(v)
    }

    pub fn wronskian(&self, t: f64) -> Result<f64, EvalError> {
        let s = self.state(t)?;
        Ok(s[0] * s[3] - s[1] * s[2])
    }

    /// Evaluator for member 0 or 1.
    pub fn member(self: &Arc<Self>, i: usize) -> Arc<dyn SpecialEvaluator> {
        assert!(i < 2);
        Arc::new(Member { pair: self.clone(), i })
    }

    /// Register both members under their names.
    pub fn register(self: &Arc<Self>, backend: &mut FunctionBackend) {
        for i in 0..2 {
            backend.insert(&self.spec.names[i], self.member(i));
        }
    }
}

fn to4(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

struct Member {
    pair: Arc<FundamentalPair>,
    i: usize,
}

impl SpecialEvaluator for Member {
    fn eval(&self, t: f64) -> Result<(f64, f64), EvalError> {
        let s = self.pair.state(t)?;
        Ok((s[2 * self.i], s[2 * self.i + 1]))
    }

    fn interval(&self) -> (f64, f64) {
        self.pair.spec.interval
    }
}

/// Sup over an even grid of `|W(t) / g(t) - W(t0) / g(t0)|`, where `g` is
/// the expected Abel factor (`exp(int p)`).
pub fn wronskian_drift(pair: &FundamentalPair, abel: impl Fn(f64) -> f64, n: usize) -> Result<f64, EvalError> {
    let (lo, hi) = pair.spec.interval;
    let w0 = pair.wronskian(pair.spec.anchor)? / abel(pair.spec.anchor);
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let w = pair.wronskian(t)? / abel(t);
        worst = worst.max((w - w0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};

    fn airy() -> LinearOdeSpec {
        LinearOdeSpec {
            var: "y".into(),
            p: Expr::zero(),
            q: parse_expr("y/2", &Scope::new(&["y"])).unwrap(),
            anchor: 0.0,
            ics: [(1.0, 0.0), (0.0, 1.0)],
            interval: (-2.0, 2.0),
            names: ["Psi1".into(), "Psi2".into()],
        }
    }

    #[test]
    fn airy_wronskian_is_one() {
        let pair = FundamentalPair::new(airy()).unwrap();
        assert!(wronskian_drift(&pair, |_| 1.0, 200).unwrap() < 1e-9);
        assert!((pair.wronskian(0.7).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(pair.state(2.5), Err(EvalError::OutOfInterval { .. })));
    }

    #[test]
    fn airy_series_check() {
        // Psi1 = 1 + y^3/12 + y^6/720 + ... for f'' = y f / 2
        let pair = FundamentalPair::new(airy()).unwrap();
        let y: f64 = 0.3;
        let series = 1.0 + y.powi(3) / 12.0 + y.powi(6) / 720.0 + y.powi(9) / 103680.0;
        assert!((pair.state(y).unwrap()[0] - series).abs() < 1e-12);
        // deterministic point queries
        assert_eq!(pair.state(0.123).unwrap(), pair.state(0.123).unwrap());
    }

    #[test]
    fn edo_lineal_abel_and_schrodinger_relation() {
        let sz = Scope::new(&["z"]);
        let psi = FundamentalPair::new(LinearOdeSpec {
            var: "z".into(),
            p: parse_expr("1/z", &sz).unwrap(),
            q: parse_expr("4*z^3", &sz).unwrap(),
            anchor: 1.0,
            ics: [(1.0, 0.0), (0.0, 1.0)],
            interval: (0.5, 2.0),
            names: ["psi1".into(), "psi2".into()],
        })
        .unwrap();
        assert!(wronskian_drift(&psi, |z| z, 200).unwrap() < 1e-8);
        let st = Scope::new(&["t"]);
        // psi(z) = phi(z^2/2) gives phi(1/2) = psi(1), phi'(1/2) = psi'(1)/1
        let phi = FundamentalPair::new(LinearOdeSpec {
            var: "t".into(),
            p: Expr::zero(),
            q: parse_expr("4*sqrt(2*t)", &st).unwrap(),
            anchor: 0.5,
            ics: [(1.0, 0.0), (0.0, 1.0)],
            interval: (0.125, 2.0),
            names: ["phi1".into(), "phi2".into()],
        })
        .unwrap();
        for z in [0.5, 0.8, 1.0, 1.3, 2.0] {
            let a = psi.state(z).unwrap();
            let b = phi.state(z * z / 2.0).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-10 * (1.0 + a[0].abs()));
            assert!((a[2] - b[2]).abs() < 1e-10 * (1.0 + a[2].abs()));
            // chain rule: psi' = z phi'
            assert!((a[1] - z * b[1]).abs() < 1e-9 * (1.0 + a[1].abs()));
        }
    }

    #[test]
    fn singular_interval_rejected() {
        let sz = Scope::new(&["z"]);
        let r = FundamentalPair::new(LinearOdeSpec {
            var: "z".into(),
            p: parse_expr("1/z", &sz).unwrap(),
            q: Expr::zero(),
            anchor: 1.0,
            ics: [(1.0, 0.0), (0.0, 1.0)],
            interval: (0.0, 2.0),
            names: ["a".into(), "b".into()],
        });
        assert!(matches!(r, Err(NumError::Singular(_))));
    }

    #[test]
    fn backend_evaluates_expressions() {
        let spec = airy();
        let [p1, p2] = spec.symbols();
        let pair = FundamentalPair::new(spec).unwrap();
        let mut b = FunctionBackend::new();
        pair.register(&mut b);
        let w = Expr::wronskian(&p1, &p2, &Expr::var("u"));
        let t = Tape::compile(&[w], &["u".into()], &b).unwrap();
        assert!((t.eval1(&[1.1]).unwrap() - 1.0).abs() < 1e-9);
        assert!(t.eval1(&[3.0]).is_err());
    }
}
