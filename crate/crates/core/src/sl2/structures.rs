//! The two solvable structures built from `F1 v1`, `F2 v2`, their omega
//! forms, the closure ladder and checks of primitives.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::expr::{Expr, Probe, Tape};
use crate::jet::{
    check_solvable_structure, combinations, lie_bracket, lstsq_residual, DifferentialForm, OrderedStructure,
    ScaledField, StructureFailure, VectorField,
};
use crate::numint::fd_form_closure;

use super::problem::{CheckRecord, Sl2Problem};
use super::Sl2Error;

#[derive(Clone, Debug)]
pub struct Structures {
    /// `<A, v3, F1 v1, F2 v2>`.
    pub first: OrderedStructure,
    /// `<A, v3, F2 v2, F1 v1>`.
    pub second: OrderedStructure,
    pub records: Vec<CheckRecord>,
}

/// Assembles both orderings, checks the commutator table of
/// `{A, v3, F1 v1, F2 v2}` and runs the solvable-structure check on each.
pub fn build_structures(p: &Sl2Problem, f1: &Expr, f2: &Expr, tol: f64) -> Result<Structures, Sl2Error> {
    let v: Vec<VectorField> = (0..3).map(|i| p.prolonged(i, 2)).collect::<Result<_, _>>()?;
    let a = &p.a;
    let (g1, g2) = (v[0].scale(f1), v[1].scale(f2));
    let probe = &p.probe;
    let seed = probe.seed;
    let anchor = "are solvable structures with respect to";
    let mut records = Vec::new();
    let mut push = |id: &str, lhs: &VectorField, rhs: &VectorField| -> Result<(), Sl2Error> {
        let r = lhs.equiv(rhs, probe, tol)?;
        records.push(CheckRecord::from_equiv(id, anchor, &r, tol, seed));
        Ok(())
    };
    // [F v, A] = F [v, A] = -F A(xi) A, using A(F) = 0
    let rho1 = -a.apply(&v[0].coeff(0));
    let rho2 = -a.apply(&v[1].coeff(0));
    let zero = VectorField::zero(&p.coords);
    push("cuentas.F1v1_A", &lie_bracket(&g1, a)?, &a.scale(&(f1 * &rho1)))?;
    push("cuentas.F2v2_A", &lie_bracket(&g2, a)?, &a.scale(&(f2 * &rho2)))?;
    push("cuentas.v3_F1v1", &lie_bracket(&v[2], &g1)?, &zero)?;
    push("cuentas.v3_F2v2", &lie_bracket(&v[2], &g2)?, &zero)?;
    push("cuentas.F1v1_F2v2", &lie_bracket(&g1, &g2)?, &v[2].scale(&(Expr::int(2) * f1 * f2)))?;

    let plain = |f: &VectorField| ScaledField::plain(f.clone());
    let first = OrderedStructure::new(vec![
        plain(a),
        plain(&v[2]),
        ScaledField::new(f1.clone(), v[0].clone()),
        ScaledField::new(f2.clone(), v[1].clone()),
    ])?;
    let second = OrderedStructure::new(vec![
        plain(a),
        plain(&v[2]),
        ScaledField::new(f2.clone(), v[1].clone()),
        ScaledField::new(f1.clone(), v[0].clone()),
    ])?;
    for (id, s) in [("structure.first", &first), ("structure.second", &second)] {
        let rep = check_solvable_structure(s, probe, tol)?;
        let mut worst = rep.step_residuals.iter().copied().fold(0.0, f64::max);
        if matches!(rep.failure, Some(StructureFailure::Independence { .. })) {
            worst = f64::INFINITY;
        }
        records.push(CheckRecord::new(id, anchor, worst, tol, rep.points, seed));
    }
    Ok(Structures {
        first,
        second,
        records,
    })
}

/// `(omega1, omega2, omega3)` of `<A, X1, X2, X3>`: `omega_i` omits `X_i`
/// and is normalized by `omega_i(X_i) = 1`.
pub fn omega_forms(s: &OrderedStructure) -> Result<[DifferentialForm; 3], Sl2Error> {
    let w = s.omega_forms()?;
    if w.len() != 3 {
        return Err(Sl2Error::Degenerate("omega forms need a four-field structure".into()));
    }
    Ok([w[0].clone(), w[1].clone(), w[2].clone()])
}

/// Worst residual of `theta = sum_k g_k ^ alpha_k` solved by least squares
/// for the one-forms `alpha_k`, normalized by `1 + |theta|`, over the probe.
/// Inputs are dense coefficient tapes: one two-form and the generators.
pub fn ideal_membership(theta: &DifferentialForm, gens: &[DifferentialForm], probe: &Probe) -> Result<(f64, usize), Sl2Error> {
    let n = theta.coords().dim();
    let pairs = combinations(n, 2);
    let mut exprs = theta.dense();
    for g in gens {
        exprs.extend(g.dense());
    }
    let (tape, pts) = probe.sample(&exprs)?;
    let m2 = pairs.len();
    let res: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let v = tape.eval(p).expect("accepted point");
            let th = DVector::from_column_slice(&v[..m2]);
            let mut m = DMatrix::zeros(m2, n * gens.len());
            for (k, _) in gens.iter().enumerate() {
                let g = &v[m2 + k * n..m2 + (k + 1) * n];
                for j in 0..n {
                    // (g ^ dx_j)_{ab} = g_a delta_jb - g_b delta_ja
                    for (row, ab) in pairs.iter().enumerate() {
                        let (a, b) = (ab[0], ab[1]);
                        let mut c = 0.0;
                        if j == b {
                            c += g[a];
                        }
                        if j == a {
                            c -= g[b];
                        }
                        m[(row, k * n + j)] = c;
                    }
                }
            }
            let (_, r) = lstsq_residual(&m, &th);
            r / (1.0 + th.norm())
        })
        .collect();
    let worst = res.iter().copied().fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    Ok((worst, pts.len()))
}

/// `d omega3 = 0` and `d omega2 = 0` symbolically and by finite differences;
/// `d omega1` in the ideal of `(omega2, omega3)`; `omega_i(X_i) = 1`.
pub fn closure_ladder(
    p: &Sl2Problem,
    s: &OrderedStructure,
    omegas: &[DifferentialForm; 3],
    tol: f64,
) -> Result<Vec<CheckRecord>, Sl2Error> {
    let probe = &p.probe;
    let seed = probe.seed;
    let anchor = "has distinguishing closure properties";
    let mut out = Vec::new();
    for (i, w) in omegas.iter().enumerate() {
        let x = s.fields[i + 1].expand();
        let r = probe.equiv1(&w.pair(&x)?, &Expr::one(), p.tol.structure)?;
        out.push(CheckRecord::from_equiv(format!("omega{}.normalized", i + 1), anchor, &r, p.tol.structure, seed));
        let r = probe.equiv1(&w.pair(&p.a)?, &Expr::zero(), p.tol.structure)?;
        out.push(CheckRecord::from_equiv(format!("omega{}.kills_A", i + 1), anchor, &r, p.tol.structure, seed));
    }
    for i in [2usize, 1] {
        let w = &omegas[i];
        let dw = w.exterior_derivative()?;
        let dense = dw.dense();
        let r = probe.equiv(&dense, &vec![Expr::zero(); dense.len()], tol)?;
        out.push(CheckRecord::from_equiv(format!("omega{}.closed_symbolic", i + 1), anchor, &r, tol, seed));
        let (_, pts) = probe.sample(&w.dense())?;
        let tape: Tape = w.compile(&probe.backend)?;
        let fd = fd_form_closure(&tape, &pts, 1e-4, tol)?;
        out.push(CheckRecord::new(format!("omega{}.closed_fd", i + 1), anchor, fd.worst, tol, pts.len(), seed));
    }
    let d1 = omegas[0].exterior_derivative()?;
    let (worst, n) = ideal_membership(&d1, &[omegas[1].clone(), omegas[2].clone()], probe)?;
    out.push(CheckRecord::new("omega1.ideal", anchor, worst, tol, n, seed));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveReport {
    pub pass: bool,
    /// Worst `|dT - w - sum a_k dI_k| / (1 + |w|)`.
    pub worst: f64,
    pub worst_point: Vec<f64>,
    pub points: usize,
}

/// Checks `dT - w = sum_k a_k dI_k` pointwise by least squares.
pub fn verify_primitive(
    probe: &Probe,
    w: &DifferentialForm,
    t: &Expr,
    mods: &[Expr],
    tol: f64,
) -> Result<PrimitiveReport, Sl2Error> {
    let c = w.coords();
    let n = c.dim();
    let mut exprs: Vec<Expr> = c.names().iter().map(|v| t.diff(v)).collect();
    exprs.extend(w.dense());
    for m in mods {
        exprs.extend(c.names().iter().map(|v| m.diff(v)));
    }
    let (tape, pts) = probe.sample(&exprs)?;
    let res: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let v = tape.eval(p).expect("accepted point");
            let g = DVector::from_fn(n, |i, _| v[i] - v[n + i]);
            let wn = DVector::from_column_slice(&v[n..2 * n]).norm();
            let m = DMatrix::from_fn(n, mods.len(), |i, k| v[2 * n + k * n + i]);
            let (_, r) = lstsq_residual(&m, &g);
            let r = r / (1.0 + wn);
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .collect();
    let mut worst = 0.0;
    let mut wp = Vec::new();
    for (p, r) in pts.iter().zip(&res) {
        if wp.is_empty() || *r > worst {
            worst = *r;
            wp = p.clone();
        }
    }
    Ok(PrimitiveReport {
        pass: worst <= tol,
        worst,
        worst_point: wp,
        points: pts.len(),
    })
}
