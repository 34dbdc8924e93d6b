//! Seeded sampling of coordinate boxes and the randomized equivalence oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::eval::{EvalError, FunctionBackend, Tape};
use super::{Expr, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("domain unusable: no valid sample among {attempted} candidates")]
    Unusable { attempted: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Excluded set `{ g = 0 }`.
#[derive(Clone, Debug)]
pub struct Locus {
    pub g: Expr,
}

/// Box of coordinate intervals with excluded loci.
#[derive(Clone, Debug)]
pub struct Domain {
    pub vars: Vec<Symbol>,
    pub bounds: Vec<(f64, f64)>,
    pub loci: Vec<Locus>,
    pub margin: f64,
}

impl Domain {
    pub fn new<S: AsRef<str>>(bounds: &[(S, f64, f64)]) -> Domain {
        Domain {
            vars: bounds.iter().map(|b| Symbol::from(b.0.as_ref())).collect(),
            bounds: bounds.iter().map(|b| (b.1, b.2)).collect(),
            loci: Vec::new(),
            margin: 1e-3,
        }
    }

    pub fn with_locus(mut self, g: Expr) -> Domain {
        self.loci.push(Locus { g });
        self
    }

    pub fn with_margin(mut self, m: f64) -> Domain {
        self.margin = m;
        self
    }

    /// Replace or add the interval of one variable.
    pub fn with_bound(mut self, var: &str, lo: f64, hi: f64) -> Domain {
        match self.vars.iter().position(|v| &**v == var) {
            Some(i) => self.bounds[i] = (lo, hi),
            None => {
                self.vars.push(var.into());
                self.bounds.push((lo, hi));
            }
        }
        self
    }

    pub fn index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| &**v == var)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.bounds).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }
}

/// Draws points from a domain, rejecting points near excluded loci and
/// points where a caller-supplied predicate fails.
pub struct Sampler {
    domain: Domain,
    loci: Vec<Tape>,
}

impl Sampler {
    pub fn new(domain: &Domain) -> Result<Sampler, SampleError> {
        let backend = FunctionBackend::new();
        let mut loci = Vec::new();
        for l in &domain.loci {
            let mut outs = vec![l.g.clone()];
            outs.extend(domain.vars.iter().map(|v| l.g.diff(v)));
            loci.push(Tape::compile(&outs, &domain.vars, &backend)?);
        }
        Ok(Sampler {
            domain: domain.clone(),
            loci,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn near_locus(&self, p: &[f64]) -> bool {
        for t in &self.loci {
            match t.eval(p) {
                Ok(v) => {
                    let g = v[0].abs();
                    let grad = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                    if grad == 0.0 {
                        if g == 0.0 {
                            return true;
                        }
                    } else if g / grad < self.domain.margin {
                        return true;
                    }
                }
                Err(_) => return true,
            }
        }
        false
    }

    /// `n` accepted points, deterministic for a given seed.
    pub fn points<F>(&self, n: usize, seed: u64, accept: F) -> Result<Vec<Vec<f64>>, SampleError>
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let max_attempts = (50 * n).max(2000);
        let mut attempted = 0;
        let batch = n.clamp(16, 256);
        while out.len() < n && attempted < max_attempts {
            let cands: Vec<Vec<f64>> = (0..batch)
                .map(|_| {
                    self.domain
                        .bounds
                        .iter()
                        .map(|&(a, b)| if a == b { a } else { rng.gen_range(a..b) })
                        .collect()
                })
                .collect();
            attempted += batch;
            let ok: Vec<bool> = cands
                .par_iter()
                .map(|p| !self.near_locus(p) && accept(p))
                .collect();
            for (p, k) in cands.into_iter().zip(ok) {
                if k && out.len() < n {
                    out.push(p);
                }
            }
        }
        if out.is_empty() && n > 0 {
            return Err(SampleError::Unusable { attempted });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivReport {
    pub pass: bool,
    pub worst: f64,
    pub worst_point: Vec<f64>,
    pub points: usize,
}

/// Relative residual used throughout: |a - b| / (1 + |a|).
pub fn rel_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs())
}

/// Componentwise numeric comparison of two expression lists.
pub fn equiv_numeric_vec(
    lhs: &[Expr],
    rhs: &[Expr],
    domain: &Domain,
    n: usize,
    tol: f64,
    seed: u64,
    backend: &FunctionBackend,
) -> Result<EquivReport, SampleError> {
    assert_eq!(lhs.len(), rhs.len());
    let mut all = lhs.to_vec();
    all.extend(rhs.iter().cloned());
    let tape = Tape::compile(&all, &domain.vars, backend)?;
    let sampler = Sampler::new(domain)?;
    let k = lhs.len();
    let pts = sampler.points(n, seed, |p| tape.eval(p).is_ok())?;
    let res: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let v = tape.eval(p).expect("accepted point evaluates");
            (0..k).map(|i| rel_residual(v[i], v[k + i])).fold(0.0, f64::max)
        })
        .collect();
    let (mut worst, mut wi) = (0.0, 0);
    for (i, r) in res.iter().enumerate() {
        if *r > worst || r.is_nan() {
            worst = *r;
            wi = i;
        }
    }
    Ok(EquivReport {
        pass: worst <= tol,
        worst,
        worst_point: pts.get(wi).cloned().unwrap_or_default(),
        points: pts.len(),
    })
}

pub fn equiv_numeric(
    e1: &Expr,
    e2: &Expr,
    domain: &Domain,
    n: usize,
    tol: f64,
    seed: u64,
    backend: &FunctionBackend,
) -> Result<EquivReport, SampleError> {
    equiv_numeric_vec(
        std::slice::from_ref(e1),
        std::slice::from_ref(e2),
        domain,
        n,
        tol,
        seed,
        backend,
    )
}

/// Sampling context shared by the verification routines: domain, sample
/// count, seed and the special-function backend.
#[derive(Clone, Debug)]
pub struct Probe {
    pub domain: Domain,
    pub points: usize,
    pub seed: u64,
    pub backend: FunctionBackend,
}

impl Probe {
    pub fn new(domain: Domain, points: usize, seed: u64, backend: FunctionBackend) -> Probe {
        Probe {
            domain,
            points,
            seed,
            backend,
        }
    }

    pub fn with_domain(&self, domain: Domain) -> Probe {
        Probe {
            domain,
            ..self.clone()
        }
    }

    pub fn with_points(&self, points: usize) -> Probe {
        Probe {
            points,
            ..self.clone()
        }
    }

    pub fn equiv(&self, lhs: &[Expr], rhs: &[Expr], tol: f64) -> Result<EquivReport, SampleError> {
        equiv_numeric_vec(lhs, rhs, &self.domain, self.points, tol, self.seed, &self.backend)
    }

    pub fn equiv1(&self, lhs: &Expr, rhs: &Expr, tol: f64) -> Result<EquivReport, SampleError> {
        self.equiv(std::slice::from_ref(lhs), std::slice::from_ref(rhs), tol)
    }

    /// Sample points at which every expression in `exprs` evaluates.
    pub fn sample(&self, exprs: &[Expr]) -> Result<(Tape, Vec<Vec<f64>>), SampleError> {
        let tape = Tape::compile(exprs, &self.domain.vars, &self.backend)?;
        let sampler = Sampler::new(&self.domain)?;
        let pts = sampler.points(self.points, self.seed, |p| tape.eval(p).is_ok())?;
        Ok((tape, pts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};

    #[test]
    fn identity_and_non_identity() {
        let s = Scope::new(&["x", "u1", "u2"]);
        let b = FunctionBackend::new();
        let d = Domain::new(&[("x", 1.0, 2.0)]);
        let e = parse_expr("x*(1/x)", &s).unwrap();
        assert!(equiv_numeric(&e, &Expr::one(), &d, 100, 1e-12, 7, &b).unwrap().pass);
        let d = Domain::new(&[("u1", -1.0, 1.0), ("u2", -1.0, 1.0)]);
        let r = equiv_numeric(&Expr::var("u1"), &Expr::var("u2"), &d, 100, 1e-12, 7, &b).unwrap();
        assert!(!r.pass);
        assert_eq!(r.points, 100);
    }

    #[test]
    fn loci_are_avoided() {
        let d = Domain::new(&[("x", -1.0, 1.0)]).with_locus(Expr::var("x")).with_margin(0.2);
        let s = Sampler::new(&d).unwrap();
        let pts = s.points(200, 1, |_| true).unwrap();
        assert!(pts.iter().all(|p| p[0].abs() >= 0.2));
    }

    #[test]
    fn unusable_domain() {
        let d = Domain::new(&[("x", 0.0, 0.0)]);
        let b = FunctionBackend::new();
        let e = Expr::var("x").recip();
        assert!(matches!(
            equiv_numeric(&e, &e, &d, 10, 1e-12, 1, &b),
            Err(SampleError::Unusable { .. })
        ));
    }

    #[test]
    fn seeds_are_deterministic() {
        let d = Domain::new(&[("x", 0.0, 1.0), ("u", -2.0, 3.0)]);
        let s = Sampler::new(&d).unwrap();
        assert_eq!(s.points(20, 9, |_| true).unwrap(), s.points(20, 9, |_| true).unwrap());
        assert_ne!(s.points(20, 9, |_| true).unwrap(), s.points(20, 10, |_| true).unwrap());
    }
}
