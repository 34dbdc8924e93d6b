//! Line integrals of one-forms along polylines and along paths projected
//! onto level sets of given functions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::expr::{EvalError, Expr, FunctionBackend, Tape};
use crate::jet::DifferentialForm;

use super::NumError;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Values followed by the gradient rows (row-major) of the constraint functions.
pub type ConstraintFn = dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync;

/// Constraint set `{ g_k = c_k }`, given by a function returning the k values
/// followed by the k gradient rows (one entry per coordinate).
#[derive(Clone)]
pub struct LevelSet {
    eval: Arc<ConstraintFn>,
    pub k: usize,
}

impl LevelSet {
    pub fn new(funcs: &[Expr], coords: &crate::jet::CoordSystem, backend: &FunctionBackend) -> Result<LevelSet, EvalError> {
        let mut outs = funcs.to_vec();
        for f in funcs {
            for name in coords.names() {
                outs.push(f.diff(name));
            }
        }
        let tape = Tape::compile(&outs, coords.names(), backend)?;
        Ok(LevelSet::from_fn(funcs.len(), move |p| tape.eval(p)))
    }

    /// Constraints evaluated by arbitrary code, e.g. numerical primitives.
    pub fn from_fn(k: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static) -> LevelSet {
        LevelSet { eval: Arc::new(f), k }
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok((self.eval)(p)?[..self.k].to_vec())
    }

    /// Gauss-Newton projection with minimum-norm steps, iterated until the
    /// constraint residual drops below `1e-13 (1 + |c|)`.
    pub fn project(&self, p: &[f64], c: &[f64]) -> Result<Vec<f64>, NumError> {
        let n = p.len();
        let mut x = p.to_vec();
        let scale = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for _ in 0..60 {
            let v = (self.eval)(&x)?;
            let r = DVector::from_iterator(self.k, (0..self.k).map(|i| v[i] - c[i]));
            if r.amax() <= 1e-13 * scale {
                return Ok(x);
            }
            let j = DMatrix::from_row_slice(self.k, n, &v[self.k..]);
            let jjt = &j * j.transpose();
            let y = jjt
                .lu()
                .solve(&r)
                .ok_or_else(|| NumError::Singular("level-set Jacobian lost rank".into()))?;
            let step = j.transpose() * y;
            for i in 0..n {
                x[i] -= step[i];
            }
        }
        let v = self.values(&x)?;
        let worst = v.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst <= 1e-11 * scale {
            Ok(x)
        } else {
            Err(NumError::NonConvergence(format!("level-set projection stalled at residual {worst:e}")))
        }
    }
}

/// A path between two points: a polyline through optional waypoints, or a
/// chord projected onto a level set.
#[derive(Clone)]
pub struct PathSpec {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub waypoints: Vec<Vec<f64>>,
    pub constraint: Option<LevelSet>,
    /// Initial subdivisions per segment.
    pub subdivisions: usize,
}

impl PathSpec {
    pub fn straight(start: Vec<f64>, end: Vec<f64>) -> PathSpec {
        PathSpec {
            start,
            end,
            waypoints: Vec::new(),
            constraint: None,
            subdivisions: 4,
        }
    }

    pub fn via(mut self, p: Vec<f64>) -> PathSpec {
        self.waypoints.push(p);
        self
    }

    pub fn on_level_set(mut self, ls: LevelSet) -> PathSpec {
        self.constraint = Some(ls);
        self
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        let mut v = vec![self.start.clone()];
        v.extend(self.waypoints.iter().cloned());
        v.push(self.end.clone());
        v
    }
}

const CONVERGED: f64 = 1e-9;
const MAX_SUBDIV: usize = 1 << 14;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// composite Gauss-Legendre over one straight segment with m pieces
fn segment_gl(w: &Tape, a: &[f64], b: &[f64], m: usize, nodes: &(Vec<f64>, Vec<f64>)) -> Result<f64, NumError> {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let mut total = 0.0;
    let mut pt = vec![0.0; a.len()];
    for piece in 0..m {
        let t0 = piece as f64 / m as f64;
        let half = 0.5 / m as f64;
        for (x, wt) in nodes.0.iter().zip(&nodes.1) {
            let t = t0 + half * (1.0 + x);
            for i in 0..a.len() {
                pt[i] = a[i] + t * d[i];
            }
            let c = w.eval(&pt)?;
            total += wt * half * dot(&c, &d);
        }
    }
    if !total.is_finite() {
        return Err(NumError::Eval(EvalError::NonFinite));
    }
    Ok(total)
}

/// Integral of the compiled one-form `w` (dense coefficients) along `path`.
pub fn integrate_compiled(w: &Tape, path: &PathSpec) -> Result<f64, NumError> {
    match &path.constraint {
        None => {
            let nodes = gauss_legendre(8);
            let verts = path.vertices();
            let mut total = 0.0;
            for seg in verts.windows(2) {
                let mut m = path.subdivisions.max(1);
                let mut prev = segment_gl(w, &seg[0], &seg[1], m, &nodes)?;
                loop {
                    m *= 2;
                    if m > MAX_SUBDIV {
                        return Err(NumError::NonConvergence("path quadrature did not settle".into()));
                    }
                    let cur = segment_gl(w, &seg[0], &seg[1], m, &nodes)?;
                    let done = (cur - prev).abs() < CONVERGED * (1.0 + cur.abs());
                    prev = cur;
                    if done {
                        break;
                    }
                }
                total += prev;
            }
            Ok(total)
        }
        Some(ls) => level_set_integral(w, ls, path),
    }
}

// Trapezoid sums over chords of the projected curve, extrapolated in h^2.
fn level_set_integral(w: &Tape, ls: &LevelSet, path: &PathSpec) -> Result<f64, NumError> {
    let c = ls.values(&path.start)?;
    let verts = path.vertices();
    let mut total = 0.0;
    for seg in verts.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let at = |t: f64| -> Result<Vec<f64>, NumError> {
            let p: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + t * (y - x)).collect();
            ls.project(&p, &c)
        };
        let mut n = 16 * path.subdivisions.max(1);
        let mut pts: Vec<Vec<f64>> = (0..=n).map(|i| at(i as f64 / n as f64)).collect::<Result<_, _>>()?;
        let mut vals: Vec<Vec<f64>> = pts.iter().map(|p| w.eval(p)).collect::<Result<_, _>>()?;
        let trap = |pts: &[Vec<f64>], vals: &[Vec<f64>]| -> f64 {
            let mut s = 0.0;
            for i in 0..pts.len() - 1 {
                let d: Vec<f64> = pts[i + 1].iter().zip(&pts[i]).map(|(q, p)| q - p).collect();
                s += 0.5 * (dot(&vals[i], &d) + dot(&vals[i + 1], &d));
            }
            s
        };
        let mut t_prev = trap(&pts, &vals);
        let mut r_prev: Option<f64> = None;
        loop {
            if 2 * n > MAX_SUBDIV {
                return Err(NumError::NonConvergence("level-set quadrature did not settle".into()));
            }
            // refine: insert midpoints
            let mut npts = Vec::with_capacity(2 * n + 1);
            let mut nvals = Vec::with_capacity(2 * n + 1);
            for i in 0..n {
                npts.push(pts[i].clone());
                nvals.push(vals[i].clone());
                let m = at((2 * i + 1) as f64 / (2 * n) as f64)?;
                nvals.push(w.eval(&m)?);
                npts.push(m);
            }
            npts.push(pts[n].clone());
            nvals.push(vals[n].clone());
            n *= 2;
            pts = npts;
            vals = nvals;
            let t_cur = trap(&pts, &vals);
            let r = (4.0 * t_cur - t_prev) / 3.0;
            t_prev = t_cur;
            if let Some(rp) = r_prev {
                if (r - rp).abs() < CONVERGED * (1.0 + r.abs()) {
                    total += r;
                    break;
                }
            }
            r_prev = Some(r);
        }
    }
    if !total.is_finite() {
        return Err(NumError::Eval(EvalError::NonFinite));
    }
    Ok(total)
}

pub fn path_integral(w: &DifferentialForm, path: &PathSpec, backend: &FunctionBackend) -> Result<f64, NumError> {
    if w.degree() != 1 {
        return Err(NumError::Setup("path integrals need a one-form".into()));
    }
    let tape = w.compile(backend)?;
    integrate_compiled(&tape, path)
}

/// Integrates along `path` and along the same endpoints through `detour`;
/// returns both values, failing if they differ by more than `tol (1 + |I|)`.
pub fn path_integral_checked(
    w: &DifferentialForm,
    path: &PathSpec,
    detour: Vec<f64>,
    tol: f64,
    backend: &FunctionBackend,
) -> Result<(f64, f64), NumError> {
    let tape = w.compile(backend)?;
    let a = integrate_compiled(&tape, path)?;
    let b = integrate_compiled(&tape, &path.clone().via(detour))?;
    if (a - b).abs() > tol * (1.0 + a.abs()) {
        return Err(NumError::PathDependence { direct: a, detour: b });
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::jet::CoordSystem;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_form_gives_potential_difference() {
        let c = CoordSystem::jet("x", "u", 2);
        let f = parse_expr("x*u1", &c.scope()).unwrap();
        let w = DifferentialForm::d(&c, &f);
        let p = vec![0.5, 0.1, -1.0, 0.2];
        let q = vec![1.5, 0.3, 2.0, -0.4];
        let b = FunctionBackend::new();
        let (i, _) = path_integral_checked(&w, &PathSpec::straight(p.clone(), q.clone()), vec![1.0, 1.0, 1.0, 1.0], 1e-9, &b).unwrap();
        assert!((i - (1.5 * 2.0 - -0.5)).abs() < 1e-12);
        // there and back
        let loop_ = PathSpec::straight(p.clone(), p.clone()).via(q);
        assert!(path_integral(&w, &loop_, &b).unwrap().abs() < 1e-9);
    }

    #[test]
    fn non_closed_form_is_path_dependent() {
        let c = CoordSystem::jet("x", "u", 0);
        // u dx is not closed
        let w = DifferentialForm::basis(&c, 0).scale(&Expr::var("u"));
        let r = path_integral_checked(
            &w,
            &PathSpec::straight(vec![0.0, 0.0], vec![1.0, 0.0]),
            vec![0.5, 1.0],
            1e-9,
            &FunctionBackend::new(),
        );
        assert!(matches!(r, Err(NumError::PathDependence { .. })));
    }

    #[test]
    fn circle_level_set() {
        // on x^2 + u^2 = 1, integrate -u dx + x du from angle 0 to angle 1
        let c = CoordSystem::jet("x", "u", 0);
        let s = c.scope();
        let w = DifferentialForm::one_form(&c, &[parse_expr("-u", &s).unwrap(), Expr::var("x")]);
        let b = FunctionBackend::new();
        let ls = LevelSet::new(&[parse_expr("x^2 + u^2", &s).unwrap()], &c, &b).unwrap();
        let end = vec![1f64.cos(), 1f64.sin()];
        let path = PathSpec::straight(vec![1.0, 0.0], end).on_level_set(ls);
        let v = path_integral(&w, &path, &b).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }
}
