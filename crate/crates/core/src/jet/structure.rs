use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::expr::{Expr, Probe, SampleError, Tape};

use super::{lie_bracket, CoordSystem, DifferentialForm, JetError, VectorField};

/// A field multiplied by a scalar, kept apart so contractions can use
/// linearity instead of carrying the scale through every coefficient.
#[derive(Clone, Debug)]
pub struct ScaledField {
    pub scale: Expr,
    pub field: VectorField,
}

impl ScaledField {
    pub fn plain(field: VectorField) -> ScaledField {
        ScaledField {
            scale: Expr::one(),
            field,
        }
    }

    pub fn new(scale: Expr, field: VectorField) -> ScaledField {
        ScaledField { scale, field }
    }

    pub fn expand(&self) -> VectorField {
        if self.scale.is_one() {
            self.field.clone()
        } else {
            self.field.scale(&self.scale)
        }
    }
}

/// Ordered list `<A, X1, ..., Xn>`.
#[derive(Clone, Debug)]
pub struct OrderedStructure {
    pub fields: Vec<ScaledField>,
}

impl OrderedStructure {
    pub fn new(fields: Vec<ScaledField>) -> Result<OrderedStructure, JetError> {
        let c = fields.first().ok_or(JetError::Mismatch)?.field.coords().clone();
        if fields.iter().any(|f| f.field.coords() != &c) {
            return Err(JetError::Mismatch);
        }
        if fields.len() != c.dim() {
            return Err(JetError::Coordinates(format!(
                "structure has {} fields on a {}-dimensional space",
                fields.len(),
                c.dim()
            )));
        }
        Ok(OrderedStructure { fields })
    }

    pub fn coords(&self) -> &CoordSystem {
        self.fields[0].field.coords()
    }

    /// The forms `omega_i = (X_n _| ... ^X_i ... _| X_1 _| A _| Omega) /
    /// (X_n _| ... _| X_1 _| A _| Omega)` for i = 1..n, returned in order.
    pub fn omega_forms(&self) -> Result<Vec<DifferentialForm>, JetError> {
        let c = self.coords();
        let vol = DifferentialForm::volume(c);
        let a = &self.fields[0].field;
        let base = vol.interior(a)?;
        let xs = &self.fields[1..];
        let mut den = base.clone();
        for x in xs {
            den = den.interior(&x.field)?;
        }
        let den = den.as_scalar();
        let mut out = Vec::new();
        for i in 0..xs.len() {
            let mut num = base.clone();
            for (j, x) in xs.iter().enumerate() {
                if j != i {
                    num = num.interior(&x.field)?;
                }
            }
            // scales of the other fields cancel between numerator and denominator;
            // the sign moves X_i _| past the later interiors so omega_i(X_i) = 1
            let sign = if (xs.len() - 1 - i).is_multiple_of(2) { 1 } else { -1 };
            let factor = Expr::int(sign) * (&xs[i].scale * &den).recip();
            out.push(num.scale(&factor));
        }
        Ok(out)
    }
}

/// Minimum-norm least squares; returns the residual norm.
pub fn lstsq_residual(m: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if m.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    // Minimum-norm solution a = M^T (M M^T)^+ b. nalgebra's bidiagonal SVD
    // loses orthogonality on the structured, rank-deficient matrices built
    // from wedge products, so go through the symmetric eigensolver instead.
    let g = m * m.transpose();
    let eig = g.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = 1e-12 * top.max(1e-300);
    let solve = |rhs: &DVector<f64>| {
        let c = eig.eigenvectors.transpose() * rhs;
        let mut y = DVector::zeros(c.len());
        for i in 0..c.len() {
            let l = eig.eigenvalues[i];
            if l > cut {
                y[i] = c[i] / l;
            }
        }
        m.transpose() * (&eig.eigenvectors * y)
    };
    let mut a = solve(b);
    // one step of refinement recovers most of the accuracy lost by squaring
    let a1 = &a + solve(&(b - m * &a));
    a = a1;
    let r = (m * &a - b).norm();
    (a, r)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StructureFailure {
    /// Fields dependent at a sample point.
    Independence { point: Vec<f64>, ratio: f64 },
    /// `[X_step, S]` not contained in the span of the preceding fields.
    Bracket { step: usize, residual: f64, point: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub pass: bool,
    /// Smallest `|det| / prod |X_i|` over the sample.
    pub min_independence: f64,
    /// Worst span residual per step (step j checks `X_j` against `<A..X_{j-1}>`).
    pub step_residuals: Vec<f64>,
    pub points: usize,
    pub failure: Option<StructureFailure>,
}

/// Numeric check of the solvable-structure conditions: pointwise
/// independence, then `[X_{j}, Y] in span <A, X1, ..., X_{j-1}>` for every
/// earlier member `Y`.
pub fn check_solvable_structure(s: &OrderedStructure, probe: &Probe, tol: f64) -> Result<StructureReport, JetError> {
    let c = s.coords();
    let n = c.dim();
    let full: Vec<VectorField> = s.fields.iter().map(|f| f.expand()).collect();
    let mut exprs: Vec<Expr> = full.iter().flat_map(|f| f.dense()).collect();
    // brackets[j-1] holds [X_j, Y] for Y in the first j fields
    let mut bracket_offsets = Vec::new();
    for j in 1..n {
        let mut offs = Vec::new();
        for y in &full[..j] {
            let b = lie_bracket(&full[j], y)?;
            offs.push(exprs.len());
            exprs.extend(b.dense());
        }
        bracket_offsets.push(offs);
    }
    let tape = Tape::compile(&exprs, &probe.domain.vars, &probe.backend).map_err(SampleError::from)?;
    let sampler = crate::expr::Sampler::new(&probe.domain)?;
    let pts = sampler.points(probe.points, probe.seed, |p| tape.eval(p).is_ok())?;
    let per_point: Vec<(f64, Vec<f64>)> = pts
        .par_iter()
        .map(|p| {
            let v = tape.eval(p).expect("accepted point");
            let cols: Vec<DVector<f64>> = (0..n).map(|k| DVector::from_column_slice(&v[k * n..(k + 1) * n])).collect();
            let m = DMatrix::from_columns(&cols);
            let det = m.determinant().abs();
            let mags: f64 = cols.iter().map(|c| c.norm()).product();
            let ratio = if mags == 0.0 { 0.0 } else { det / mags };
            let mut steps = Vec::new();
            for (j, offs) in bracket_offsets.iter().enumerate() {
                let span = DMatrix::from_columns(&cols[..=j]);
                let mut worst: f64 = 0.0;
                for &o in offs {
                    let b = DVector::from_column_slice(&v[o..o + n]);
                    let (_, r) = lstsq_residual(&span, &b);
                    worst = worst.max(r / b.norm().max(1.0));
                }
                steps.push(worst);
            }
            (ratio, steps)
        })
        .collect();
    let mut report = StructureReport {
        pass: true,
        min_independence: f64::INFINITY,
        step_residuals: vec![0.0; n - 1],
        points: pts.len(),
        failure: None,
    };
    for (p, (ratio, steps)) in pts.iter().zip(&per_point) {
        if *ratio < report.min_independence {
            report.min_independence = *ratio;
        }
        if *ratio <= 1e-9 && report.failure.is_none() {
            report.failure = Some(StructureFailure::Independence {
                point: p.clone(),
                ratio: *ratio,
            });
        }
        for (j, r) in steps.iter().enumerate() {
            if *r > report.step_residuals[j] {
                report.step_residuals[j] = *r;
            }
        }
    }
    if report.failure.is_none() {
        for (j, r) in report.step_residuals.iter().enumerate() {
            if *r > tol {
                let point = pts
                    .iter()
                    .zip(&per_point)
                    .max_by(|a, b| a.1 .1[j].total_cmp(&b.1 .1[j]))
                    .map(|(p, _)| p.clone())
                    .unwrap_or_default();
                report.failure = Some(StructureFailure::Bracket {
                    step: j + 1,
                    residual: *r,
                    point,
                });
                break;
            }
        }
    }
    report.pass = report.failure.is_none();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Domain, FunctionBackend};

    #[test]
    fn single_symmetry_in_the_plane() {
        // A = d/dx + u d/du, X = d/du with [X, A] = X... use X = exp(x) d/du:
        // [X, A] = X(A) - A(X) = exp(x) d/du - exp(x) d/du = 0 in span(A)
        let c = CoordSystem::jet("x", "u", 0);
        let s = c.scope();
        let a = VectorField::from_named(&c, &[("x", Expr::one()), ("u", Expr::var("u"))]).unwrap();
        let x = VectorField::from_named(&c, &[("u", parse_expr("exp(x)", &s).unwrap())]).unwrap();
        let st = OrderedStructure::new(vec![ScaledField::plain(a), ScaledField::plain(x)]).unwrap();
        let probe = Probe::new(Domain::new(&[("x", -1.0, 1.0), ("u", -1.0, 1.0)]), 50, 1, FunctionBackend::new());
        let r = check_solvable_structure(&st, &probe, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn dependent_fields_are_flagged() {
        let c = CoordSystem::jet("x", "u", 0);
        let a = VectorField::basis(&c, 0);
        let st = OrderedStructure::new(vec![ScaledField::plain(a.clone()), ScaledField::new(Expr::int(2), a)]).unwrap();
        let probe = Probe::new(Domain::new(&[("x", -1.0, 1.0), ("u", -1.0, 1.0)]), 20, 1, FunctionBackend::new());
        let r = check_solvable_structure(&st, &probe, 1e-10).unwrap();
        assert!(matches!(r.failure, Some(StructureFailure::Independence { .. })));
    }

    #[test]
    fn lstsq_exact_and_residual() {
        let m = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let (_, r) = lstsq_residual(&m, &DVector::from_column_slice(&[2.0, 0.0, 0.0]));
        assert!(r < 1e-14);
        let (_, r) = lstsq_residual(&m, &DVector::from_column_slice(&[0.0, 1.0, 0.0]));
        assert!((r - 1.0).abs() < 1e-14);
    }
}
