//! Complete sets of three first integrals by the three methods: closed
//! forms where known, numerical primitives of the omega forms otherwise.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::expr::{EvalError, Expr, Tape};
use crate::jet::DifferentialForm;
use crate::numint::{integrate_compiled, LevelSet, PathSpec};

use super::problem::{CheckRecord, Sl2Problem};
use super::Sl2Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Three quadratures of `omega3`, `omega2`, `omega1`.
    One,
    /// `I1` (or `I2`) with `F1`, `F2`.
    Two,
    /// `I1`, `I2` and a primitive of `omega1` on their level sets.
    Three,
}

impl TryFrom<u8> for Method {
    type Error = Sl2Error;
    fn try_from(n: u8) -> Result<Method, Sl2Error> {
        match n {
            1 => Ok(Method::One),
            2 => Ok(Method::Two),
            3 => Ok(Method::Three),
            _ => Err(Sl2Error::Missing(format!("method {n} (expected 1, 2 or 3)"))),
        }
    }
}

/// Whatever the caller has at hand; each method takes what it needs.
#[derive(Clone, Debug, Default)]
pub struct MethodInputs {
    pub f: Option<(Expr, Expr)>,
    pub omegas: Option<[DifferentialForm; 3]>,
    pub i1: Option<Expr>,
    pub i2: Option<Expr>,
    pub theta3: Option<Expr>,
    /// Allow numeric primitives in place of a missing closed-form `Theta3`.
    pub numeric_fallback: bool,
    /// Base point of numeric primitives; defaults to the box center.
    pub base: Option<Vec<f64>>,
}

/// A first integral realized as a function of a point of the jet space.
#[derive(Clone)]
pub enum IntegralEvaluator {
    Closed { name: String, expr: Expr, tape: Tape },
    /// `int_base^p w` along the straight segment, for closed `w`.
    Primitive { name: String, form: DifferentialForm, tape: Tape, base: Vec<f64> },
    /// `int w` along the level set of `constraint` through `p`, starting at
    /// the projection of `base` onto that level set.
    OnLevelSet { name: String, form: DifferentialForm, tape: Tape, base: Vec<f64>, constraint: LevelSet },
}

impl std::fmt::Debug for IntegralEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl IntegralEvaluator {
    pub fn name(&self) -> &str {
        match self {
            IntegralEvaluator::Closed { name, .. }
            | IntegralEvaluator::Primitive { name, .. }
            | IntegralEvaluator::OnLevelSet { name, .. } => name,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            IntegralEvaluator::Closed { name, expr, .. } => format!("{name} = {expr}"),
            IntegralEvaluator::Primitive { name, base, .. } => {
                format!("{name}: numeric primitive along straight paths from {base:?}")
            }
            IntegralEvaluator::OnLevelSet { name, base, .. } => {
                format!("{name}: numeric primitive on level sets, from the projection of {base:?}")
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, Sl2Error> {
        match self {
            IntegralEvaluator::Closed { tape, .. } => Ok(tape.eval1(p)?),
            IntegralEvaluator::Primitive { tape, base, .. } => {
                Ok(integrate_compiled(tape, &PathSpec::straight(base.clone(), p.to_vec()))?)
            }
            IntegralEvaluator::OnLevelSet {
                tape, base, constraint, ..
            } => {
                let c = constraint.values(p)?;
                let start = constraint.project(base, &c)?;
                let path = PathSpec::straight(start, p.to_vec()).on_level_set(constraint.clone());
                Ok(integrate_compiled(tape, &path)?)
            }
        }
    }

    /// Coefficients of the differential (for primitives, the integrated form).
    pub fn gradient(&self) -> Vec<Expr> {
        match self {
            IntegralEvaluator::Closed { expr, tape, .. } => tape.vars().iter().map(|v| expr.diff(v)).collect(),
            IntegralEvaluator::Primitive { form, .. } | IntegralEvaluator::OnLevelSet { form, .. } => form.dense(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegralSet {
    pub method: Method,
    pub members: Vec<IntegralEvaluator>,
    /// Smallest `sigma_3 / sigma_1` of the 3x4 Jacobian over the sample.
    pub min_ratio: f64,
    pub record: CheckRecord,
}

const RANK_TOL: f64 = 1e-8;

fn closed(p: &Sl2Problem, name: &str, e: &Expr) -> Result<IntegralEvaluator, Sl2Error> {
    Ok(IntegralEvaluator::Closed {
        name: name.to_string(),
        expr: e.clone(),
        tape: Tape::compile(std::slice::from_ref(e), p.coords.names(), &p.probe.backend)?,
    })
}

fn base_point(p: &Sl2Problem, inputs: &MethodInputs, exprs: &[Expr]) -> Result<Vec<f64>, Sl2Error> {
    if let Some(b) = &inputs.base {
        return Ok(b.clone());
    }
    let c = p.probe.domain.center();
    let tape = Tape::compile(exprs, &p.probe.domain.vars, &p.probe.backend)?;
    if tape.eval(&c).map(|v| v.iter().all(|x| x.is_finite())).unwrap_or(false) {
        return Ok(c);
    }
    let (_, pts) = p.probe.sample(exprs)?;
    Ok(pts[0].clone())
}

fn primitive(p: &Sl2Problem, name: &str, w: &DifferentialForm, base: &[f64]) -> Result<IntegralEvaluator, Sl2Error> {
    Ok(IntegralEvaluator::Primitive {
        name: name.to_string(),
        form: w.clone(),
        tape: w.compile(&p.probe.backend)?,
        base: base.to_vec(),
    })
}

fn on_level_set(
    p: &Sl2Problem,
    name: &str,
    w: &DifferentialForm,
    base: &[f64],
    constraint: LevelSet,
) -> Result<IntegralEvaluator, Sl2Error> {
    Ok(IntegralEvaluator::OnLevelSet {
        name: name.to_string(),
        form: w.clone(),
        tape: w.compile(&p.probe.backend)?,
        base: base.to_vec(),
        constraint,
    })
}

/// Level sets of two numeric primitives of closed forms.
fn primitive_constraint(p: &Sl2Problem, forms: [&DifferentialForm; 2], base: &[f64]) -> Result<LevelSet, Sl2Error> {
    let tapes = [forms[0].compile(&p.probe.backend)?, forms[1].compile(&p.probe.backend)?];
    let base = base.to_vec();
    Ok(LevelSet::from_fn(2, move |x| {
        let mut out = Vec::with_capacity(2 + 2 * x.len());
        for t in &tapes {
            let v = integrate_compiled(t, &PathSpec::straight(base.clone(), x.to_vec()))
                .map_err(|e| EvalError::Backend(e.to_string()))?;
            out.push(v);
        }
        for t in &tapes {
            out.extend(t.eval(x)?);
        }
        Ok(out)
    }))
}

fn need<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T, Sl2Error> {
    x.as_ref().ok_or_else(|| Sl2Error::Missing(what.to_string()))
}

/// Three first integrals for the chosen method, with a rank-3 check of their
/// Jacobian at the probe's sample points.
pub fn complete_integral_set(p: &Sl2Problem, method: Method, inputs: &MethodInputs) -> Result<IntegralSet, Sl2Error> {
    let members = match method {
        Method::One => {
            let w = need(&inputs.omegas, "omega forms (method 1)")?;
            let base = base_point(p, inputs, &[w[0].dense(), w[1].dense(), w[2].dense()].concat())?;
            let constraint = primitive_constraint(p, [&w[2], &w[1]], &base)?;
            vec![
                primitive(p, "Theta1", &w[2], &base)?,
                primitive(p, "Theta2", &w[1], &base)?,
                on_level_set(p, "Theta3", &w[0], &base, constraint)?,
            ]
        }
        Method::Two => {
            let (f1, f2) = need(&inputs.f, "F1, F2 (method 2)")?;
            let first = match (&inputs.i1, &inputs.i2) {
                (Some(i1), _) => closed(p, "I1", i1)?,
                (None, Some(i2)) => closed(p, "I2", i2)?,
                _ => return Err(Sl2Error::Missing("I1 or I2 (method 2)".into())),
            };
            vec![first, closed(p, "F1", f1)?, closed(p, "F2", f2)?]
        }
        Method::Three => {
            let i1 = need(&inputs.i1, "I1 (method 3)")?;
            let i2 = need(&inputs.i2, "I2 (method 3)")?;
            let third = match (&inputs.theta3, &inputs.omegas) {
                (Some(t), _) => closed(p, "Theta3", t)?,
                (None, Some(w)) if inputs.numeric_fallback => {
                    let base = base_point(p, inputs, &w[0].dense())?;
                    let ls = LevelSet::new(&[i1.clone(), i2.clone()], &p.coords, &p.probe.backend)?;
                    on_level_set(p, "Theta3", &w[0], &base, ls)?
                }
                _ => return Err(Sl2Error::Missing("Theta3 or the numeric fallback (method 3)".into())),
            };
            vec![closed(p, "I1", i1)?, closed(p, "I2", i2)?, third]
        }
    };
    let grads: Vec<Expr> = members.iter().flat_map(|m| m.gradient()).collect();
    let (tape, pts) = p.probe.sample(&grads)?;
    let n = p.coords.dim();
    let ratios: Vec<f64> = pts
        .par_iter()
        .map(|x| {
            let v = tape.eval(x).expect("accepted point");
            let m = DMatrix::from_row_slice(3, n, &v);
            let sv = m.singular_values();
            let (hi, lo) = (sv.max(), sv.min());
            if hi > 0.0 {
                lo / hi
            } else {
                0.0
            }
        })
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let names: Vec<String> = members.iter().map(|m| m.name().to_string()).collect();
    if !(min_ratio > RANK_TOL) {
        return Err(Sl2Error::Dependent {
            members: names,
            ratio: min_ratio,
        });
    }
    // residual convention: smaller is better, so report the inverse ratio scaled to the threshold
    let record = CheckRecord::new(
        format!("integrals.method{}.independent", method as u8 + 1),
        "three independent first integrals",
        RANK_TOL / min_ratio,
        1.0,
        pts.len(),
        p.probe.seed,
    );
    Ok(IntegralSet {
        method,
        members,
        min_ratio,
        record,
    })
}
