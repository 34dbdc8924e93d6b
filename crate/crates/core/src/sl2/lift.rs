//! The commuting-symmetry system for `hbar`, the closed forms `beta`, lifts
//! of reduced integrals and the F-functions on the original jet space.

use crate::expr::{Expr, Probe};
use crate::jet::{lie_bracket, DifferentialForm, VectorField};

use super::problem::{CheckRecord, Sl2Problem};
use super::reduce::ReducedProblem;
use super::Sl2Error;

fn zero_check(probe: &Probe, e: &Expr, id: &str, anchor: &str, tol: f64) -> Result<CheckRecord, Sl2Error> {
    let r = probe.equiv1(e, &Expr::zero(), tol)?;
    Ok(CheckRecord::from_equiv(id, anchor, &r, tol, probe.seed))
}

fn field_zero(probe: &Probe, v: &VectorField, id: &str, anchor: &str, tol: f64) -> Result<CheckRecord, Sl2Error> {
    let r = v.equiv(&VectorField::zero(v.coords()), probe, tol)?;
    Ok(CheckRecord::from_equiv(id, anchor, &r, tol, probe.seed))
}

/// The four defining relations of `hbar1`, `hbar2` and pairwise commutation
/// of `{A, hbar1 X1, hbar2 X2}`. Every relation is homogeneous in each
/// `hbar`, so residuals are taken relative to it and the check stays scale
/// free near poles of `hbar`.
pub fn verify_hs(r: &ReducedProblem, h1: &Expr, h2: &Expr, tol: f64) -> Result<Vec<CheckRecord>, Sl2Error> {
    if h1.is_zero() || h2.is_zero() {
        return Err(Sl2Error::Degenerate("hbar must be nonvanishing".into()));
    }
    let probe = &r.reduction.probe;
    let a = &r.reduction.a_red;
    let [x1, x2] = &r.x_fields;
    let [lq1, lq2] = &r.lambda_q;
    let anchor = "is a system of commuting symmetries";
    let mut out = vec![
        zero_check(probe, &((a.apply(h1) - lq1 * h1) / h1), "hs.A_h1", anchor, tol)?,
        zero_check(probe, &((x2.apply(h1) - &r.rho * h1) / h1), "hs.X2_h1", anchor, tol)?,
        zero_check(probe, &((a.apply(h2) - lq2 * h2) / h2), "hs.A_h2", anchor, tol)?,
        zero_check(probe, &((x1.apply(h2) - &r.rho * h2) / h2), "hs.X1_h2", anchor, tol)?,
    ];
    let (y1, y2) = (x1.scale(h1), x2.scale(h2));
    let (k1, k2, k12) = (h1.recip(), h2.recip(), (h1 * h2).recip());
    out.push(field_zero(probe, &lie_bracket(a, &y1)?.scale(&k1), "hs.commute_A_1", anchor, tol)?);
    out.push(field_zero(probe, &lie_bracket(a, &y2)?.scale(&k2), "hs.commute_A_2", anchor, tol)?);
    out.push(field_zero(probe, &lie_bracket(&y1, &y2)?.scale(&k12), "hs.commute_1_2", anchor, tol)?);
    Ok(out)
}

/// `(1 / X1(I2), 1 / X2(I1))`.
pub fn h_from_integrals(i1: &Expr, i2: &Expr, x1: &VectorField, x2: &VectorField) -> Result<(Expr, Expr), Sl2Error> {
    let d1 = x1.apply(i2);
    let d2 = x2.apply(i1);
    if d1.is_zero() || d2.is_zero() {
        return Err(Sl2Error::Degenerate("X1(I2) or X2(I1) vanishes identically".into()));
    }
    Ok((d1.recip(), d2.recip()))
}

#[derive(Clone, Debug)]
pub struct Betas {
    pub beta: [DifferentialForm; 2],
    pub mu: [Expr; 2],
}

/// `beta_i = mu_i X_i _| A _| (dy ^ dw ^ dw1)` with
/// `mu_1 = 1 / (hbar2 (lQ1 - lQ2))`, `mu_2 = 1 / (hbar1 (lQ2 - lQ1))`.
/// The records check `d beta_i = 0` and that `beta_i` kills `A` and `X_i`.
pub fn beta_forms(r: &ReducedProblem, h1: &Expr, h2: &Expr, tol: f64) -> Result<(Betas, Vec<CheckRecord>), Sl2Error> {
    let gap = &r.lambda_q[0] - &r.lambda_q[1];
    if gap.is_zero() {
        return Err(Sl2Error::Degenerate("lambda_Q1 = lambda_Q2".into()));
    }
    if h1.is_zero() || h2.is_zero() {
        return Err(Sl2Error::Degenerate("hbar must be nonvanishing".into()));
    }
    let mu = [(h2 * &gap).recip(), (-(h1 * &gap)).recip()];
    let red = &r.reduction.red;
    let a = &r.reduction.a_red;
    let vol = DifferentialForm::volume(red).interior(a)?;
    let probe = &r.reduction.probe;
    let mut recs = Vec::new();
    let mut beta = Vec::new();
    for i in 0..2 {
        let b = vol.interior(&r.x_fields[i])?.scale(&mu[i]);
        let db = b.exterior_derivative()?;
        let r0 = probe.equiv(&db.dense(), &vec![Expr::zero(); db.dense().len()], tol)?;
        recs.push(CheckRecord::from_equiv(format!("beta{}.closed", i + 1), "are (locally) exact", &r0, tol, probe.seed));
        let kills = [b.pair(a)?, b.pair(&r.x_fields[i])?];
        let r1 = probe.equiv(&kills, &[Expr::zero(), Expr::zero()], tol)?;
        recs.push(CheckRecord::from_equiv(format!("beta{}.annihilators", i + 1), "beta(A) = beta(X) = 0", &r1, tol, probe.seed));
        beta.push(b);
    }
    Ok((
        Betas {
            beta: [beta[0].clone(), beta[1].clone()],
            mu,
        },
        recs,
    ))
}

/// `A(I1) = v1(I1) = v3(I1) = 0` and `A(I2) = v2(I2) = v3(I2) = 0` on the
/// original jet space.
pub fn check_first_integrals(p: &Sl2Problem, i1: &Expr, i2: &Expr, tol: f64) -> Result<Vec<CheckRecord>, Sl2Error> {
    let anchor = "two functionally independent first integrals";
    let mut out = Vec::new();
    let v: Vec<VectorField> = (0..3).map(|i| p.prolonged(i, 2)).collect::<Result<_, _>>()?;
    for (name, i, ann) in [("I1", i1, 0usize), ("I2", i2, 1usize)] {
        out.push(zero_check(&p.probe, &p.a.apply(i), &format!("integral.{name}.A"), anchor, tol)?);
        out.push(zero_check(&p.probe, &v[ann].apply(i), &format!("integral.{name}.v{}", ann + 1), anchor, tol)?);
        out.push(zero_check(&p.probe, &v[2].apply(i), &format!("integral.{name}.v3"), anchor, tol)?);
    }
    Ok(out)
}

/// `(1 / v1^(2)(I2), 1 / v2^(2)(I1))`.
pub fn f_from_integrals(p: &Sl2Problem, i1: &Expr, i2: &Expr) -> Result<(Expr, Expr), Sl2Error> {
    let d1 = p.prolonged(0, 2)?.apply(i2);
    let d2 = p.prolonged(1, 2)?.apply(i1);
    if d1.is_zero() || d2.is_zero() {
        return Err(Sl2Error::Degenerate("v1(I2) or v2(I1) vanishes identically".into()));
    }
    Ok((d1.recip(), d2.recip()))
}

/// `F_i = varsigma_i hbar_i / Q_i`, pulled back to the original jet space.
pub fn f_from_h(r: &ReducedProblem, h1: &Expr, h2: &Expr) -> Result<(Expr, Expr), Sl2Error> {
    let red = &r.reduction;
    let mut f = Vec::new();
    for (i, h) in [h1, h2].into_iter().enumerate() {
        if r.q[i].is_zero() {
            return Err(Sl2Error::Degenerate(format!("Q{} vanishes identically", i + 1)));
        }
        f.push(&r.inherited[i].varsigma * &red.lift(h) / red.lift(&r.q[i]));
    }
    Ok((f[0].clone(), f[1].clone()))
}

/// The six relations `v3(F1) = F1, A(F1) = 0, v2(F1) = 0, v3(F2) = -F2,
/// A(F2) = 0, v1(F2) = 0`.
pub fn verify_tres(p: &Sl2Problem, f1: &Expr, f2: &Expr, tol: f64) -> Result<Vec<CheckRecord>, Sl2Error> {
    let v: Vec<VectorField> = (0..3).map(|i| p.prolonged(i, 2)).collect::<Result<_, _>>()?;
    let anchor = "the functions F1 and F2";
    let rels = [
        ("tres.v3_F1", v[2].apply(f1) - f1),
        ("tres.A_F1", p.a.apply(f1)),
        ("tres.v2_F1", v[1].apply(f1)),
        ("tres.v3_F2", v[2].apply(f2) + f2),
        ("tres.A_F2", p.a.apply(f2)),
        ("tres.v1_F2", v[0].apply(f2)),
    ];
    // relative to the size of F so that the check is scale free
    let mut out = Vec::new();
    for (id, e) in rels {
        let f = if id.ends_with("F1") { f1 } else { f2 };
        let r = p.probe.equiv1(&(e / f), &Expr::zero(), tol)?;
        out.push(CheckRecord::from_equiv(id, anchor, &r, tol, p.probe.seed));
    }
    Ok(out)
}
