//! Diagnostics: constancy along trajectories, finite-difference closure of
//! one-forms, residuals of parametric solutions, transformed scalar ODEs.

use rayon::prelude::*;

use crate::expr::{EvalError, Tape};

use super::rk::{dopri5, RkOptions, Trajectory};
use super::NumError;

/// `max |I(p) - I(p0)| / (1 + |I(p0)|)` over the trajectory samples. `eval`
/// receives `[x, y...]`.
pub fn constancy_report<F>(eval: F, traj: &Trajectory) -> Result<f64, NumError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError>,
{
    let i0 = eval(&traj.point(0))?;
    if !i0.is_finite() {
        return Err(NumError::Eval(EvalError::NonFinite));
    }
    let mut worst: f64 = 0.0;
    for p in traj.points() {
        let v = eval(&p)?;
        if !v.is_finite() {
            return Err(NumError::Eval(EvalError::NonFinite));
        }
        worst = worst.max((v - i0).abs() / (1.0 + i0.abs()));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosureReport {
    pub pass: bool,
    /// Largest `|d w|` coefficient over points and index pairs.
    pub worst: f64,
    pub worst_point: Vec<f64>,
    pub worst_pair: (usize, usize),
}

/// Fourth-order central differences of the coefficients of a compiled
/// one-form (dense coefficient tape over the coordinates), assembled into
/// `(dw)_{ij} = d_i w_j - d_j w_i`.
pub fn fd_form_closure(w: &Tape, points: &[Vec<f64>], h: f64, tol: f64) -> Result<ClosureReport, NumError> {
    let per: Vec<Result<(f64, (usize, usize)), EvalError>> = points
        .par_iter()
        .map(|p| {
            let n = p.len();
            // jac[i][j] = d_i w_j
            let mut jac = vec![vec![0.0; n]; n];
            let mut q = p.clone();
            for (i, row) in jac.iter_mut().enumerate() {
                let mut f = |s: f64| -> Result<Vec<f64>, EvalError> {
                    q[i] = p[i] + s * h;
                    w.eval(&q)
                };
                let (m2, m1, p1, p2) = (f(-2.0)?, f(-1.0)?, f(1.0)?, f(2.0)?);
                q[i] = p[i];
                for j in 0..n {
                    row[j] = (m2[j] - 8.0 * m1[j] + 8.0 * p1[j] - p2[j]) / (12.0 * h);
                }
            }
            let mut worst = (0.0, (0, 0));
            for i in 0..n {
                for j in i + 1..n {
                    let v = (jac[i][j] - jac[j][i]).abs();
                    if v > worst.0 || v.is_nan() {
                        worst = (v, (i, j));
                    }
                }
            }
            Ok(worst)
        })
        .collect();
    let mut rep = ClosureReport {
        pass: true,
        worst: 0.0,
        worst_point: Vec::new(),
        worst_pair: (0, 0),
    };
    for (p, r) in points.iter().zip(per) {
        let (v, pair) = r?;
        if v > rep.worst || v.is_nan() {
            rep.worst = v;
            rep.worst_point = p.clone();
            rep.worst_pair = pair;
        }
    }
    rep.pass = rep.worst <= tol;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionResidual {
    pub max: f64,
    pub worst_s: f64,
    pub samples: usize,
}

/// Residual of `u''' = phi(x, u, u1, u2)` along the parametric curve
/// `s -> (x(s), u(s))` (the tape's two outputs, over one variable).
/// Derivatives come from 7-point central differences with step `h`; the
/// residual is `|u3 - phi| / max(|u3|, |phi|)`. `bounds`, if given, is the
/// allowed box for `(x, u)`.
pub fn solution_residual(
    curve: &Tape,
    phi: &Tape,
    span: (f64, f64),
    samples: usize,
    h: f64,
    bounds: Option<[(f64, f64); 2]>,
) -> Result<SolutionResidual, NumError> {
    let ss: Vec<f64> = (0..samples)
        .map(|i| span.0 + (span.1 - span.0) * (i as f64 + 0.5) / samples as f64)
        .collect();
    let res: Vec<Result<f64, NumError>> = ss
        .par_iter()
        .map(|&s| {
            let mut xs = [0.0; 7];
            let mut us = [0.0; 7];
            for k in 0..7 {
                let v = curve.eval(&[s + (k as f64 - 3.0) * h])?;
                xs[k] = v[0];
                us[k] = v[1];
            }
            if let Some(b) = bounds {
                let (x, u) = (xs[3], us[3]);
                if !(b[0].0..=b[0].1).contains(&x) || !(b[1].0..=b[1].1).contains(&u) {
                    return Err(NumError::OutOfBox { s, x, u });
                }
            }
            let d1 = |f: &[f64; 7]| (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h);
            let d2 = |f: &[f64; 7]| {
                (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5] + 2.0 * f[6]) / (180.0 * h * h)
            };
            let d3 = |f: &[f64; 7]| (f[0] - 8.0 * f[1] + 13.0 * f[2] - 13.0 * f[4] + 8.0 * f[5] - f[6]) / (8.0 * h * h * h);
            let (xd, xdd, xddd) = (d1(&xs), d2(&xs), d3(&xs));
            let (ud, udd, uddd) = (d1(&us), d2(&us), d3(&us));
            let u1 = ud / xd;
            let n = udd * xd - ud * xdd;
            let u2 = n / xd.powi(3);
            let u3 = ((uddd * xd - ud * xddd) * xd - 3.0 * xdd * n) / xd.powi(5);
            let f = phi.eval1(&[xs[3], us[3], u1, u2])?;
            let scale = u3.abs().max(f.abs()).max(1e-300);
            let r = (u3 - f).abs() / scale;
            if !r.is_finite() {
                return Err(NumError::Eval(EvalError::NonFinite));
            }
            Ok(r)
        })
        .collect();
    let mut out = SolutionResidual {
        max: 0.0,
        worst_s: ss.first().copied().unwrap_or(span.0),
        samples,
    };
    for (s, r) in ss.iter().zip(res) {
        let r = r?;
        if r > out.max {
            out.max = r;
            out.worst_s = *s;
        }
    }
    Ok(out)
}

/// Along a trajectory, map each sample to `(s, m)` with `map` and compare
/// with an independent integration of `dm/ds = rhs(s, m)` started from the
/// first sample. Returns `max |m_traj - m_ode| / (1 + |m_ode|)`.
pub fn transformed_ode_drift(traj: &Trajectory, map: &Tape, rhs: &Tape, tol: f64) -> Result<f64, NumError> {
    let sm: Vec<Vec<f64>> = traj.points().map(|p| map.eval(&p)).collect::<Result<_, _>>()?;
    let (s0, m0) = (sm[0][0], sm[0][1]);
    let s1 = sm[sm.len() - 1][0];
    let mut regs = Vec::new();
    let f = |s: f64, y: &[f64], out: &mut [f64]| rhs.eval_into(&[s, y[0]], &mut regs, out);
    let sol = dopri5(f, s0, &[m0], s1, &RkOptions::tol(tol))?;
    let mut worst: f64 = 0.0;
    for v in &sm {
        let m = sol.at(v[0])?[0];
        worst = worst.max((v[1] - m).abs() / (1.0 + m.abs()));
    }
    Ok(worst)
}
