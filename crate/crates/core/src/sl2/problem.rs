use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::expr::{EquivReport, Expr, Probe, Tape};
use crate::jet::{associated_field, is_point_symmetry, lie_bracket, lstsq_residual, prolong, CoordSystem, VectorField};

use super::Sl2Error;

/// One verified relation: what was checked, against which reference label,
/// with what outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub residual: f64,
    pub tol: f64,
    pub points: usize,
    pub seed: u64,
    pub pass: bool,
}

impl CheckRecord {
    /// Non-finite residuals are stored as `f64::MAX` and fail.
    pub fn new(id: impl Into<String>, anchor: &str, residual: f64, tol: f64, points: usize, seed: u64) -> CheckRecord {
        let (residual, pass) = if residual.is_finite() {
            (residual, residual <= tol)
        } else {
            (f64::MAX, false)
        };
        CheckRecord {
            id: id.into(),
            anchor: anchor.to_string(),
            residual,
            tol,
            points,
            seed,
            pass,
        }
    }

    pub fn from_equiv(id: impl Into<String>, anchor: &str, r: &EquivReport, tol: f64, seed: u64) -> CheckRecord {
        CheckRecord::new(id, anchor, r.worst, tol, r.points, seed)
    }
}

/// Tolerance tiers. `relations` is for the algebra itself, `symbolic` for
/// residuals of symbolic identities, `structure` for identities that pass
/// through the special-function integrator, `numeric` for finite
/// differences, quadrature and trajectories, `solution` for residuals of
/// explicit solutions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub relations: f64,
    pub symbolic: f64,
    pub structure: f64,
    pub numeric: f64,
    pub solution: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            relations: 1e-12,
            symbolic: 1e-10,
            structure: 1e-8,
            numeric: 1e-6,
            solution: 1e-4,
        }
    }
}

/// A third-order equation `u3 = phi(x, u, u1, u2)` with three point fields
/// on `(x, u)`.
#[derive(Clone, Debug)]
pub struct Sl2Problem {
    pub coords: CoordSystem,
    pub phi: Expr,
    pub a: VectorField,
    pub gens: [VectorField; 3],
    pub probe: Probe,
    pub tol: Tolerances,
}

impl Sl2Problem {
    pub fn new(
        coords: CoordSystem,
        phi: Expr,
        gens: [VectorField; 3],
        probe: Probe,
        tol: Tolerances,
    ) -> Result<Sl2Problem, Sl2Error> {
        if coords.order() != 2 {
            return Err(Sl2Error::Degenerate("the equation must be of third order (coordinates up to u2)".into()));
        }
        let base = coords.truncate(0);
        for g in &gens {
            if g.coords() != &base {
                return Err(Sl2Error::Degenerate("generators must live on (x, u)".into()));
            }
            for (_, c) in g.components() {
                base.covers(c)?;
            }
        }
        let a = associated_field(&phi, &coords)?;
        Ok(Sl2Problem {
            coords,
            phi,
            a,
            gens,
            probe,
            tol,
        })
    }

    /// `v_i` prolonged to the jet space of the given order (0 returns it as is).
    pub fn prolonged(&self, i: usize, order: usize) -> Result<VectorField, Sl2Error> {
        if order == 0 {
            return Ok(self.gens[i].clone());
        }
        Ok(prolong(&self.gens[i], &self.coords.truncate(order))?)
    }

    /// `[v_i^(2), A] = -A(xi_i) A` for each generator.
    pub fn symmetry_checks(&self) -> Result<Vec<CheckRecord>, Sl2Error> {
        (0..3)
            .map(|i| {
                let r = is_point_symmetry(&self.gens[i], &self.a, &self.probe, self.tol.symbolic)?;
                Ok(CheckRecord::from_equiv(
                    format!("symmetry.v{}", i + 1),
                    "lie symmetry condition",
                    &r,
                    self.tol.symbolic,
                    self.probe.seed,
                ))
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct RelationsReport {
    pub pass: bool,
    /// Residuals of `[v1,v2] = 2 v3`, `[v1,v3] = v1`, `[v3,v2] = v2`.
    pub residuals: [f64; 3],
    /// First bracket that fails, as text.
    pub failing: Option<String>,
    /// Least-squares structure constants: row k expresses bracket k in the
    /// basis (v1, v2, v3).
    pub constants: [[f64; 3]; 3],
    pub records: Vec<CheckRecord>,
}

const BRACKETS: [(usize, usize, &str); 3] = [(0, 1, "[v1,v2] = 2 v3"), (0, 2, "[v1,v3] = v1"), (2, 1, "[v3,v2] = v2")];

/// Checks the sl(2,R) relations for the given basis and fits the structure
/// constants it actually has.
pub fn check_sl2_relations(gens: &[VectorField; 3], probe: &Probe, tol: f64) -> Result<RelationsReport, Sl2Error> {
    let expected = [gens[2].scale(&Expr::int(2)), gens[0].clone(), gens[1].clone()];
    let mut residuals = [0.0; 3];
    let mut records = Vec::new();
    let mut failing = None;
    let mut brackets = Vec::new();
    for (k, (i, j, label)) in BRACKETS.iter().enumerate() {
        let b = lie_bracket(&gens[*i], &gens[*j])?;
        let r = b.equiv(&expected[k], probe, tol)?;
        let rec = CheckRecord::from_equiv(format!("sl2.bracket{}", k + 1), label, &r, tol, probe.seed);
        residuals[k] = rec.residual;
        if !rec.pass && failing.is_none() {
            failing = Some(label.to_string());
        }
        records.push(rec);
        brackets.push(b);
    }
    let constants = fit_constants(gens, &brackets, probe)?;
    Ok(RelationsReport {
        pass: failing.is_none(),
        residuals,
        failing,
        constants,
        records,
    })
}

fn fit_constants(gens: &[VectorField; 3], brackets: &[VectorField], probe: &Probe) -> Result<[[f64; 3]; 3], Sl2Error> {
    let n = gens[0].coords().dim();
    let mut exprs: Vec<Expr> = gens.iter().flat_map(|g| g.dense()).collect();
    for b in brackets {
        exprs.extend(b.dense());
    }
    let (tape, pts): (Tape, _) = probe.sample(&exprs)?;
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut rhs: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for p in &pts {
        let v = tape.eval(p)?;
        for c in 0..n {
            rows.push([v[c], v[n + c], v[2 * n + c]]);
            for (k, r) in rhs.iter_mut().enumerate() {
                r.push(v[3 * n + k * n + c]);
            }
        }
    }
    let m = DMatrix::from_fn(rows.len(), 3, |r, c| rows[r][c]);
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let (a, _) = lstsq_residual(&m, &DVector::from_vec(rhs[k].clone()));
        for c in 0..3 {
            out[k][c] = a[c];
        }
    }
    Ok(out)
}
