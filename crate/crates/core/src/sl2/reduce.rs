//! Reduction by the scaling generator `v3` and the pair of C-infinity
//! symmetries the reduced equation inherits from `v1`, `v2`.

use std::collections::HashMap;

use crate::expr::{Domain, EquivReport, Expr, Probe, Symbol};
use crate::jet::{associated_field, characteristic, lambda_prolong, lie_bracket, CoordSystem, VectorField};

use super::problem::{CheckRecord, Sl2Problem};
use super::Sl2Error;

/// What the reduction needs besides the problem: the invariants `y(x,u)`,
/// `w(x,u,u1)`, and the inverse (section) map giving `(x, u, u1, u2)` in
/// terms of `(y, alpha, w, w1)`.
#[derive(Clone, Debug)]
pub struct ReductionInput {
    /// Names of `(y, w, w1)`.
    pub names: [Symbol; 3],
    /// Name of the canonical coordinate along `v3`.
    pub alpha: Symbol,
    pub y: Expr,
    pub w: Expr,
    pub alpha_expr: Option<Expr>,
    pub section: [Expr; 4],
    pub varsigma1: Option<Expr>,
    /// Box over `(y, w, w1)`.
    pub domain: Domain,
    pub alpha_range: (f64, f64),
}

/// The reduced equation `w1' = phi_red(y, w, w1)` with the maps between the
/// two sides.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub red: CoordSystem,
    /// Sampling on `(y, w, w1)`.
    pub probe: Probe,
    /// Sampling on `(y, alpha, w, w1)`, for alpha-independence.
    pub section_probe: Probe,
    pub y: Expr,
    pub w: Expr,
    /// `D(w)/D(y)` on the original jet space.
    pub w1_full: Expr,
    pub phi_red: Expr,
    pub a_red: VectorField,
    ground: HashMap<Symbol, Expr>,
    section: HashMap<Symbol, Expr>,
    lift_map: HashMap<Symbol, Expr>,
}

impl Reduction {
    /// Expression on the original jet space, rewritten in `(y, w, w1)` by the
    /// section at `alpha = 0`. Only meaningful for `v3`-invariant input.
    pub fn descend(&self, e: &Expr) -> Expr {
        e.subs(&self.ground)
    }

    /// Reduced expression pulled back to `(x, u, u1, u2)`.
    pub fn lift(&self, e: &Expr) -> Expr {
        e.subs(&self.lift_map)
    }

    /// Compares `e` along the full section with its descent: a pass means
    /// `e` does not depend on `alpha`, so the descent is well defined.
    pub fn alpha_free(&self, exprs: &[Expr], tol: f64) -> Result<EquivReport, Sl2Error> {
        let along: Vec<Expr> = exprs.iter().map(|e| e.subs(&self.section)).collect();
        let down: Vec<Expr> = exprs.iter().map(|e| self.descend(e)).collect();
        Ok(self.section_probe.equiv(&along, &down, tol)?)
    }
}

/// Builds the reduced equation and validates the inputs: invariance of
/// `y`, `w`, the section round trip, and alpha-independence of the reduced
/// right-hand side.
pub fn reduce_with_v3(p: &Sl2Problem, input: &ReductionInput) -> Result<(Reduction, Vec<CheckRecord>), Sl2Error> {
    let tol = p.tol.symbolic;
    let seed = p.probe.seed;
    let mut names: Vec<Symbol> = input.names.to_vec();
    names.push(input.alpha.clone());
    for n in &names {
        if p.coords.index(n).is_some() {
            return Err(Sl2Error::Degenerate(format!("reduced name `{n}` clashes with an original coordinate")));
        }
    }
    let red = CoordSystem::from_names(&input.names)?;
    let j1 = p.coords.truncate(1);
    j1.covers(&input.w)?;
    p.coords.truncate(0).covers(&input.y)?;

    let mut records = Vec::new();
    let v3 = p.prolonged(2, 1)?;
    let inv = p.probe.equiv(&[v3.apply(&input.y), v3.apply(&input.w)], &[Expr::zero(), Expr::zero()], tol)?;
    records.push(CheckRecord::from_equiv("reduction.invariants", "invariants of v3", &inv, tol, seed));
    if !inv.pass {
        let which = if p.probe.equiv1(&v3.apply(&input.y), &Expr::zero(), tol)?.pass {
            input.w.to_string()
        } else {
            input.y.to_string()
        };
        return Err(Sl2Error::NotInvariant(which));
    }
    let dy = p.coords.total_derivative(&input.y, None)?;
    if dy.is_zero() {
        return Err(Sl2Error::Degenerate("D(y) vanishes identically".into()));
    }
    let w1_full = p.coords.total_derivative(&input.w, None)? / &dy;
    let phi_full = p.coords.total_derivative(&w1_full, Some(&p.phi))? / &dy;

    let orig = p.coords.names();
    let section: HashMap<Symbol, Expr> = orig.iter().cloned().zip(input.section.iter().cloned()).collect();
    let ground: HashMap<Symbol, Expr> = section
        .iter()
        .map(|(k, v)| (k.clone(), v.subs1(&input.alpha, &Expr::zero())))
        .collect();
    let lift_map: HashMap<Symbol, Expr> = [
        (input.names[0].clone(), input.y.clone()),
        (input.names[1].clone(), input.w.clone()),
        (input.names[2].clone(), w1_full.clone()),
    ]
    .into_iter()
    .collect();

    let mut sdom = input.domain.clone();
    sdom = sdom.with_bound(&input.alpha, input.alpha_range.0, input.alpha_range.1);
    let section_probe = p.probe.with_domain(sdom);
    let rprobe = p.probe.with_domain(input.domain.clone());

    // round trip: the invariants evaluated on the section return the reduced coordinates
    let mut lhs = vec![input.y.subs(&section), input.w.subs(&section), w1_full.subs(&section)];
    let mut rhs: Vec<Expr> = input.names.iter().map(Expr::var_sym).collect();
    if let Some(a) = &input.alpha_expr {
        lhs.push(a.subs(&section));
        rhs.push(Expr::var_sym(&input.alpha));
    }
    let rt = section_probe.equiv(&lhs, &rhs, tol)?;
    records.push(CheckRecord::from_equiv("reduction.section", "section round trip", &rt, tol, seed));
    if !rt.pass {
        return Err(Sl2Error::Degenerate(format!("section map does not invert the invariants (residual {:e})", rt.worst)));
    }

    let r = Reduction {
        a_red: VectorField::zero(&red),
        red: red.clone(),
        probe: rprobe,
        section_probe,
        y: input.y.clone(),
        w: input.w.clone(),
        w1_full,
        phi_red: Expr::zero(),
        ground,
        section,
        lift_map,
    };
    let af = r.alpha_free(std::slice::from_ref(&phi_full), tol)?;
    records.push(CheckRecord::from_equiv("reduction.closes", "can be written in terms of the invariants", &af, tol, seed));
    if !af.pass {
        return Err(Sl2Error::NotProjectable("the reduced right-hand side".into()));
    }
    let phi_red = r.descend(&phi_full);
    let a_red = associated_field(&phi_red, &red)?;
    Ok((Reduction { phi_red, a_red, ..r }, records))
}

/// Monomial `x^a u^b` with `v3(f) = f`, searched by total degree, pure
/// powers of `x` first. Returns `(varsigma1, varsigma2 = 1/varsigma1)`.
pub fn find_varsigma(v3: &VectorField, probe: &Probe, tol: f64) -> Result<(Expr, Expr), Sl2Error> {
    let c = v3.coords();
    let (x, u) = (c.var(0), c.var(1));
    for deg in 1..=6i64 {
        let mut cands: Vec<(i64, i64)> = Vec::new();
        for a in -3..=3i64 {
            for b in -3..=3i64 {
                if a.abs() + b.abs() == deg {
                    cands.push((a, b));
                }
            }
        }
        // pure x first, then by |b|, then positive exponents first
        cands.sort_by_key(|&(a, b)| (b != 0, b.abs(), -a, -b));
        for (a, b) in cands {
            let m = x.powi(a) * u.powi(b);
            let r = probe.equiv1(&(v3.apply(&m) / &m), &Expr::one(), tol);
            if matches!(r, Ok(ref rep) if rep.pass) {
                let inv = m.recip();
                return Ok((m, inv));
            }
        }
    }
    Err(Sl2Error::NoVarsigma)
}

/// One inherited C-infinity symmetry `(vbar, lambda)` and its
/// lambda-prolongation `Y`.
#[derive(Clone, Debug)]
pub struct Inherited {
    pub varsigma: Expr,
    pub vbar: VectorField,
    pub lambda: Expr,
    pub y_field: VectorField,
    /// `mu = -(A + lambda)(xi)`.
    pub mu: Expr,
}

/// Projects `varsigma_i v_i^(1)` to `(y, w)` and computes
/// `lambda_i = -D(varsigma_i) / (D(y) varsigma_i)` there.
pub fn inherited_csym(
    p: &Sl2Problem,
    r: &Reduction,
    varsigma: &[Expr; 2],
) -> Result<([Inherited; 2], Vec<CheckRecord>), Sl2Error> {
    let tol = p.tol.symbolic;
    let seed = p.probe.seed;
    let mut records = Vec::new();
    let j1 = p.coords.truncate(1);
    let v3 = p.prolonged(2, 1)?;
    let dy = j1.total_derivative(&r.y, None)?;
    let sign = [Expr::one(), Expr::int(-1)];
    let mut out = Vec::new();
    for i in 0..2 {
        let s = &varsigma[i];
        let eig = p.probe.equiv1(&v3.apply(s), &(s * &sign[i]), tol)?;
        records.push(CheckRecord::from_equiv(
            format!("varsigma{}.eigen", i + 1),
            "v3(varsigma) = +-varsigma",
            &eig,
            tol,
            seed,
        ));
        let vi = p.prolonged(i, 1)?;
        let sv = vi.scale(s);
        let comm = lie_bracket(&v3, &sv)?;
        let rc = comm.equiv(&VectorField::zero(&j1), &p.probe, tol)?;
        records.push(CheckRecord::from_equiv(
            format!("varsigma{}.commutes", i + 1),
            "[v3, varsigma v] = 0",
            &rc,
            tol,
            seed,
        ));
        let xi = s * &vi.apply(&r.y);
        let eta = s * &vi.apply(&r.w);
        let lam = -(j1.total_derivative(s, None)? / (&dy * s));
        let af = r.alpha_free(&[xi.clone(), eta.clone(), lam.clone()], tol)?;
        records.push(CheckRecord::from_equiv(
            format!("inherited{}.projects", i + 1),
            "expressible in the invariants",
            &af,
            tol,
            seed,
        ));
        if !af.pass {
            return Err(Sl2Error::NotProjectable(format!("varsigma{} v{}", i + 1, i + 1)));
        }
        let mut vbar = VectorField::zero(&r.red);
        vbar.set(0, r.descend(&xi));
        vbar.set(1, r.descend(&eta));
        let lambda = r.descend(&lam);
        let y_field = lambda_prolong(&vbar, &lambda, &r.red)?;
        let xi_bar = vbar.coeff(0);
        let mu = -(r.a_red.apply(&xi_bar) + &lambda * &xi_bar);
        let lhs = lie_bracket(&y_field, &r.a_red)?;
        let rhs = y_field.scale(&lambda).add(&r.a_red.scale(&mu));
        let rep = lhs.equiv(&rhs, &r.probe, p.tol.structure)?;
        records.push(CheckRecord::from_equiv(
            format!("inherited{}.csym", i + 1),
            "are C-infinity symmetries of the equation",
            &rep,
            p.tol.structure,
            seed,
        ));
        out.push(Inherited {
            varsigma: s.clone(),
            vbar,
            lambda,
            y_field,
            mu,
        });
    }
    let arr: [Inherited; 2] = out.try_into().expect("two inherited symmetries");
    Ok((arr, records))
}

/// `(lambda_Q, X)` with `lambda_Q = lambda + A(Q)/Q` and `X` the
/// lambda_Q-prolongation of `d/dw`.
pub fn canonical_rep(vbar: &VectorField, lambda: &Expr, a_red: &VectorField) -> Result<(Expr, VectorField), Sl2Error> {
    let q = characteristic(vbar);
    if q.is_zero() {
        return Err(Sl2Error::Degenerate("characteristic Q vanishes identically".into()));
    }
    let lq = lambda + &(a_red.apply(&q) / &q);
    let dw = VectorField::basis(a_red.coords(), 1);
    let x = lambda_prolong(&dw, &lq, a_red.coords())?;
    Ok((lq, x))
}

/// `rho = (X1(lambda_Q2) - X2(lambda_Q1)) / (lambda_Q1 - lambda_Q2)`.
pub fn rho_coeff(x1: &VectorField, x2: &VectorField, lq1: &Expr, lq2: &Expr) -> Result<Expr, Sl2Error> {
    let gap = lq1 - lq2;
    if gap.is_zero() {
        return Err(Sl2Error::Degenerate("lambda_Q1 = lambda_Q2".into()));
    }
    Ok((x1.apply(lq2) - x2.apply(lq1)) / gap)
}

/// Everything on the reduced side, assembled and checked.
#[derive(Clone, Debug)]
pub struct ReducedProblem {
    pub reduction: Reduction,
    pub inherited: [Inherited; 2],
    pub q: [Expr; 2],
    pub lambda_q: [Expr; 2],
    pub x_fields: [VectorField; 2],
    pub rho: Expr,
    pub records: Vec<CheckRecord>,
}

impl ReducedProblem {
    pub fn build(p: &Sl2Problem, input: &ReductionInput) -> Result<ReducedProblem, Sl2Error> {
        let (reduction, mut records) = reduce_with_v3(p, input)?;
        let vs = match &input.varsigma1 {
            Some(s) => (s.clone(), s.recip()),
            None => find_varsigma(&p.gens[2], &p.probe, p.tol.symbolic)?,
        };
        let (inherited, recs) = inherited_csym(p, &reduction, &[vs.0, vs.1])?;
        records.extend(recs);
        let tol = p.tol.structure;
        let seed = p.probe.seed;
        let a = &reduction.a_red;
        let mut lq = Vec::new();
        let mut xs = Vec::new();
        for (i, inh) in inherited.iter().enumerate() {
            let (l, x) = canonical_rep(&inh.vbar, &inh.lambda, a)?;
            let q = characteristic(&inh.vbar);
            let rhs = x.scale(&q).add(&a.scale(&inh.vbar.coeff(0)));
            let rep = inh.y_field.equiv(&rhs, &reduction.probe, p.tol.symbolic)?;
            records.push(CheckRecord::from_equiv(
                format!("canonical{}.decomposition", i + 1),
                "Y = Q X + xi A",
                &rep,
                p.tol.symbolic,
                seed,
            ));
            let br = lie_bracket(&x, a)?;
            let rep = br.equiv(&x.scale(&l), &reduction.probe, tol)?;
            records.push(CheckRecord::from_equiv(
                format!("canonical{}.bracket", i + 1),
                "[X, A] = lambda_Q X",
                &rep,
                tol,
                seed,
            ));
            lq.push(l);
            xs.push(x);
        }
        let rho = rho_coeff(&xs[0], &xs[1], &lq[0], &lq[1])?;
        let br = lie_bracket(&xs[0], &xs[1])?;
        let rep = br.equiv(&xs[0].sub(&xs[1]).scale(&rho), &reduction.probe, tol)?;
        records.push(CheckRecord::from_equiv(
            "canonical.rho",
            "form a two-dimensional algebra",
            &rep,
            tol,
            seed,
        ));
        let q = [characteristic(&inherited[0].vbar), characteristic(&inherited[1].vbar)];
        Ok(ReducedProblem {
            reduction,
            inherited,
            q,
            lambda_q: [lq[0].clone(), lq[1].clone()],
            x_fields: [xs[0].clone(), xs[1].clone()],
            rho,
            records,
        })
    }
}
