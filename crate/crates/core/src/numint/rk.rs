//! Dormand-Prince 5(4) with PI step control and cubic Hermite dense output.

use crate::expr::{Assignment, EvalError, Expr, FunctionBackend, Symbol, Tape};

use super::NumError;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Debug)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub hmax: Option<f64>,
    pub max_steps: usize,
    /// Error per unit step: a step of length `h` may contribute `h / |x1 - x0|`
    /// of the tolerance, so the global error is proportional to the tolerance.
    pub per_unit_step: bool,
}

impl RkOptions {
    pub fn tol(tol: f64) -> RkOptions {
        RkOptions {
            rtol: tol,
            atol: tol,
            h0: None,
            hmax: None,
            max_steps: 1_000_000,
            per_unit_step: false,
        }
    }

    /// Tolerance-proportional control, for comparing runs at different tolerances.
    pub fn proportional(tol: f64) -> RkOptions {
        RkOptions {
            per_unit_step: true,
            ..RkOptions::tol(tol)
        }
    }
}

/// Accepted steps of an integration. `xs` is strictly monotone in the
/// direction of integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// Right-hand side at each sample, used by the Hermite interpolant.
    pub dys: Vec<Vec<f64>>,
    /// Scaled local error estimate of the step ending at each sample (0 for the first).
    pub errs: Vec<f64>,
    pub tol: f64,
    pub rejected: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.xs.len() - 1;
        (self.xs[i], &self.ys[i])
    }

    /// `[x, y0, y1, ...]` of sample `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = vec![self.xs[i]];
        p.extend_from_slice(&self.ys[i]);
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn span(&self) -> (f64, f64) {
        let a = self.xs[0];
        let b = self.xs[self.xs.len() - 1];
        (a.min(b), a.max(b))
    }

    /// Dense output by cubic Hermite interpolation between samples.
    pub fn at(&self, x: f64) -> Result<Vec<f64>, NumError> {
        let (lo, hi) = self.span();
        if !(lo..=hi).contains(&x) {
            return Err(NumError::OutOfRange { x, lo, hi });
        }
        let forward = self.xs[self.xs.len() - 1] >= self.xs[0];
        // index of the left end of the bracketing step
        let k = if forward {
            self.xs.partition_point(|&t| t <= x)
        } else {
            self.xs.partition_point(|&t| t >= x)
        };
        if k == 0 {
            return Ok(self.ys[0].clone());
        }
        if k >= self.xs.len() {
            return Ok(self.ys[self.xs.len() - 1].clone());
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        if s == 0.0 {
            return Ok(self.ys[k - 1].clone());
        }
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok((0..self.ys[0].len())
            .map(|i| {
                h00 * self.ys[k - 1][i] + h10 * h * self.dys[k - 1][i] + h01 * self.ys[k][i] + h11 * h * self.dys[k][i]
            })
            .collect())
    }
}

fn err_norm(err: &[f64], y0: &[f64], y1: &[f64], o: &RkOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction).
pub fn dopri5<F>(mut f: F, x0: f64, y0: &[f64], x1: f64, o: &RkOptions) -> Result<Trajectory, NumError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), EvalError>,
{
    let n = y0.len();
    let mut k = vec![vec![0.0; n]; 7];
    f(x0, y0, &mut k[0])?;
    check_finite(&k[0])?;
    let mut traj = Trajectory {
        xs: vec![x0],
        ys: vec![y0.to_vec()],
        dys: vec![k[0].clone()],
        errs: vec![0.0],
        tol: o.rtol.max(o.atol),
        rejected: 0,
    };
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(traj);
    }
    let dir = span.signum();
    let hmax = o.hmax.unwrap_or(span.abs());
    let mut h = match o.h0 {
        Some(h) => h.abs().min(hmax),
        None => initial_step(&mut f, x0, y0, &k[0], o, hmax)?,
    };
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut facold: f64 = 1e-4;
    let beta = 0.04;
    // the scaled estimate is O(h^4) under per-unit-step control
    let order = if o.per_unit_step { 0.25 } else { 0.2 };
    let expo1 = order - beta * 0.75;
    let mut steps = 0;
    let mut last_rejected = false;
    loop {
        if steps >= o.max_steps {
            return Err(NumError::TooManySteps { x, steps });
        }
        let remaining = (x1 - x) * dir;
        if remaining <= 1e-14 * x.abs().max(1.0) {
            break;
        }
        if h > remaining {
            h = remaining;
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(NumError::StepUnderflow { x, state: y.clone() });
        }
        steps += 1;
        let hs = h * dir;
        // stages 2..7; a failed evaluation counts as a rejection
        let mut stage_ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            let out = &mut k[s];
            if f(x + C[s] * hs, &ytmp, out).is_err() || out.iter().any(|v| !v.is_finite()) {
                stage_ok = false;
                break;
            }
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
        }
        if !stage_ok {
            traj.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        for i in 0..n {
            err[i] = hs * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        }
        let mut e = err_norm(&err, &y, &ynew, o);
        if o.per_unit_step {
            e *= span.abs() / h;
        }
        let fac11 = e.powf(expo1);
        let mut fac = fac11 / facold.powf(beta);
        fac = (fac / 0.9).clamp(0.2, 10.0);
        let mut hnew = h / fac;
        if e <= 1.0 {
            facold = e.max(1e-4);
            x += hs;
            y.copy_from_slice(&ynew);
            // FSAL: the seventh stage is f at the new point
            let k7 = k[6].clone();
            k[0].copy_from_slice(&k7);
            traj.xs.push(x);
            traj.ys.push(y.clone());
            traj.dys.push(k7);
            traj.errs.push(e);
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew.min(hmax);
        } else {
            hnew = h / (fac11 / 0.9).min(5.0);
            traj.rejected += 1;
            last_rejected = true;
            h = hnew;
        }
    }
    // land exactly on x1
    let last = traj.xs.len() - 1;
    if traj.xs[last] != x1 && (traj.xs[last] - x1).abs() <= 1e-14 * x1.abs().max(1.0) {
        traj.xs[last] = x1;
    }
    Ok(traj)
}

fn check_finite(v: &[f64]) -> Result<(), NumError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumError::Eval(EvalError::NonFinite))
    }
}

// Hairer's starting step heuristic.
fn initial_step<F>(f: &mut F, x0: f64, y0: &[f64], f0: &[f64], o: &RkOptions, hmax: f64) -> Result<f64, NumError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), EvalError>,
{
    let n = y0.len().max(1) as f64;
    let sc: Vec<f64> = y0.iter().map(|y| o.atol + o.rtol * y.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(hmax);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    if f(x0 + h, &y1, &mut f1).is_err() {
        return Ok((h * 1e-3).max(1e-10).min(hmax));
    }
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h;
    let der = d1.max(d2);
    let h1 = if der <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der).powf(0.2) };
    Ok((100.0 * h).min(h1).min(hmax))
}

/// Integrate the first-order system whose state is `vars[1..]` with right-hand
/// sides `rhs` (one per state variable), independent variable `vars[0]`.
pub fn rk_solve(
    rhs: &[Expr],
    vars: &[Symbol],
    ic: &Assignment,
    span: (f64, f64),
    tol: f64,
    backend: &FunctionBackend,
) -> Result<Trajectory, NumError> {
    if rhs.len() + 1 != vars.len() {
        return Err(NumError::Setup(format!(
            "{} right-hand sides for {} state variables",
            rhs.len(),
            vars.len().saturating_sub(1)
        )));
    }
    let tape = Tape::compile(rhs, vars, backend)?;
    let mut y0 = Vec::new();
    for v in &vars[1..] {
        y0.push(*ic.0.get(v).ok_or_else(|| EvalError::Unbound(v.to_string()))?);
    }
    let x0 = span.0;
    let mut regs = Vec::new();
    let mut pt = vec![0.0; vars.len()];
    let f = |x: f64, y: &[f64], out: &mut [f64]| {
        pt[0] = x;
        pt[1..].copy_from_slice(y);
        tape.eval_into(&pt, &mut regs, out)
    };
    dopri5(f, x0, &y0, span.1, &RkOptions::tol(tol))
}

/// `[u1, u2, ..., phi]`: the first-order system of `u^(n) = phi` on a jet
/// space with coordinates `(x, u, u1, ..., u_{n-1})`.
pub fn ode_system(phi: &Expr, coords: &crate::jet::CoordSystem) -> Vec<Expr> {
    let mut out: Vec<Expr> = (2..coords.dim()).map(|i| coords.var(i)).collect();
    out.push(phi.clone());
    out
}
