//! The commands behind the CLI, as library functions returning reports.

use std::path::Path;

use num::BigRational;
use rayon::prelude::*;

use crate::expr::{Expr, Sampler, Symbol, Tape};
use crate::jet::DifferentialForm;
use crate::numint::{dopri5, ode_system, solution_residual, transformed_ode_drift, wronskian_drift, RkOptions, Trajectory};
use crate::sl2::{
    beta_forms, build_structures, check_first_integrals, check_sl2_relations, closure_ladder, complete_integral_set,
    f_from_h, f_from_integrals, h_from_integrals, omega_forms, verify_hs, verify_primitive, verify_tres, CheckRecord,
    IntegralEvaluator, IntegralSet, Method, MethodInputs, ReducedProblem, Sl2Error, Sl2Problem,
};

use super::problem::{ProblemError, ProblemFile, TrajectorySpec};
use super::report::{Environment, VerificationReport};

pub const DEFAULT_SEED: u64 = 0x5128;
pub const SEED_ENV: &str = "SL2QUAD_SEED";

/// Drift allowed in `W / exp(int p)` over a pair's interval.
pub const WRONSKIAN_TOL: f64 = 1e-9;

/// Samples of a parametric solution and the difference step for its
/// derivatives. The step balances truncation of the third difference near
/// poles of the curve against the 1e-12 noise of the special functions.
const SOLUTION_SAMPLES: usize = 200;
const SOLUTION_STEP: f64 = 2e-3;

/// Numeric primitives are expensive to evaluate, so their constancy is
/// checked at this many points per trajectory.
const NUMERIC_SAMPLES: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {err}")]
    Problem { path: String, err: ProblemError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
}

impl CliError {
    /// 2 for anything wrong with the input, 1 for failures of the pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sl2(Sl2Error::Missing(_)) => 2,
            CliError::Sl2(_) => 1,
            _ => 2,
        }
    }
}

/// `SL2QUAD_SEED` if set (decimal or `0x` hex), otherwise the built-in seed.
pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => parse_seed(&s).map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|_| format!("`{s}` is not a seed (decimal or 0x-prefixed hex)"))
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the sampling box's point count.
    pub points: Option<usize>,
    /// Overrides the tolerance of symbolic identities.
    pub tol: Option<f64>,
    /// Overrides the trajectory count.
    pub trajectories: Option<usize>,
    pub method: Method,
}

impl RunOptions {
    pub fn new(seed: u64) -> RunOptions {
        RunOptions {
            seed,
            points: None,
            tol: None,
            trajectories: None,
            method: Method::Three,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.points == Some(0) {
            return Err(CliError::Usage("--points must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage("--tol must be a positive number".into()));
            }
        }
        Ok(())
    }
}

pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
    ProblemFile::load(path).map_err(|err| CliError::Problem {
        path: path.display().to_string(),
        err,
    })
}

/// The bundled problem files, by example name.
pub const EXAMPLES: [(&str, &str); 2] = [
    ("airy", include_str!("../../problems/example1.problem")),
    ("schrodinger", include_str!("../../problems/example2.problem")),
];

pub fn bundled(name: &str) -> Result<ProblemFile, CliError> {
    let text = EXAMPLES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = EXAMPLES.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown example `{name}`; available: {}", names.join(", ")))
        })?;
    ProblemFile::parse(text).map_err(|err| CliError::Problem {
        path: format!("<{name}>"),
        err,
    })
}

fn problem(pf: &ProblemFile, opts: &RunOptions) -> Result<Sl2Problem, CliError> {
    let mut p = pf.problem(opts.seed)?;
    if let Some(n) = opts.points {
        p.probe = p.probe.with_points(n);
    }
    if let Some(t) = opts.tol {
        p.tol.symbolic = t;
    }
    Ok(p)
}

fn report(command: &str, pf: &ProblemFile, p: &Sl2Problem) -> VerificationReport {
    VerificationReport::new(Environment {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        problem: pf.name.clone(),
        seed: p.probe.seed,
        points: p.probe.points,
    })
}

fn failed(id: &str, anchor: &str, tol: f64, seed: u64) -> CheckRecord {
    CheckRecord::new(id, anchor, f64::INFINITY, tol, 0, seed)
}

fn prefixed(prefix: &str, recs: Vec<CheckRecord>) -> Vec<CheckRecord> {
    recs.into_iter()
        .map(|mut r| {
            r.id = format!("{prefix}{}", r.id);
            r
        })
        .collect()
}

/// Brackets and symmetry conditions.
pub fn cmd_check(pf: &ProblemFile, opts: &RunOptions) -> Result<VerificationReport, CliError> {
    opts.validate()?;
    let p = problem(pf, opts)?;
    let mut rep = report("check", pf, &p);
    check_stage(&p, &mut rep)?;
    Ok(rep)
}

fn check_stage(p: &Sl2Problem, rep: &mut VerificationReport) -> Result<(), CliError> {
    let rel = check_sl2_relations(&p.gens, &p.probe, p.tol.relations)?;
    rep.extend(rel.records);
    rep.extend(p.symmetry_checks()?);
    Ok(())
}

/// Everything derived on the way to a complete set of integrals.
struct Derived {
    reduced: Option<ReducedProblem>,
    integrals: Option<(Expr, Expr)>,
    hbar: Option<(Expr, Expr)>,
    f: Option<(Expr, Expr)>,
    omegas: Option<[DifferentialForm; 3]>,
    set: Option<IntegralSet>,
}

fn fixture_pair(pf: &ProblemFile, a: &str, b: &str) -> Option<(Expr, Expr)> {
    Some((pf.fixture(a)?.clone(), pf.fixture(b)?.clone()))
}

fn equiv_record(
    p: &Sl2Problem,
    id: &str,
    anchor: &str,
    lhs: &[Expr],
    rhs: &[Expr],
    tol: f64,
    reduced: Option<&ReducedProblem>,
) -> Result<CheckRecord, CliError> {
    // reduced-side comparisons sample the reduced box
    let probe = match reduced {
        Some(r) => &r.reduction.probe,
        None => &p.probe,
    };
    let e = probe.equiv(lhs, rhs, tol).map_err(Sl2Error::from)?;
    Ok(CheckRecord::from_equiv(id, anchor, &e, tol, probe.seed))
}

/// The stages shared by `build` and `verify`. `full` adds the reduced side,
/// comparisons with fixtures and the primitive check of `Theta3`.
fn derive(pf: &ProblemFile, p: &Sl2Problem, method: Method, full: bool, rep: &mut VerificationReport) -> Result<Derived, CliError> {
    let seed = p.probe.seed;
    let tol = p.tol;
    let mut d = Derived {
        reduced: None,
        integrals: fixture_pair(pf, "I1", "I2"),
        hbar: None,
        f: None,
        omegas: None,
        set: None,
    };

    // reduction by v3 and the inherited C-infinity symmetries
    if let Some(input) = &pf.reduction {
        match ReducedProblem::build(p, input) {
            Ok(r) => {
                rep.extend(r.records.clone());
                d.reduced = Some(r);
            }
            Err(e) => {
                rep.push(failed("reduction.build", "reduction by v3", tol.symbolic, seed));
                rep.artifact("reduction.error", e.to_string());
            }
        }
    }
    if full {
        if let Some(r) = &d.reduced {
            let red = &r.reduction;
            if let Some(f) = pf.fixture("phi_red") {
                rep.push(equiv_record(p, "fixture.phi_red", "such reduced equation", std::slice::from_ref(&red.phi_red), std::slice::from_ref(f), tol.symbolic, Some(r))?);
            }
            for (i, k) in ["1", "2"].iter().enumerate() {
                if let Some(f) = pf.fixture(&format!("lambda{k}")) {
                    let id = format!("fixture.lambda{k}");
                    rep.push(equiv_record(p, &id, "projected C-infinity symmetries", &[r.inherited[i].lambda.clone()], std::slice::from_ref(f), tol.symbolic, Some(r))?);
                }
                if let Some(f) = pf.fixture(&format!("lambdaQ{k}")) {
                    let id = format!("fixture.lambdaQ{k}");
                    rep.push(equiv_record(p, &id, "canonical representative", &[r.lambda_q[i].clone()], std::slice::from_ref(f), tol.symbolic, Some(r))?);
                }
            }
        }
    }

    // first integrals on the jet space
    if let Some((i1, i2)) = &d.integrals {
        rep.extend(check_first_integrals(p, i1, i2, tol.structure)?);
    }

    // hbar: fixtures first, otherwise recovered from the descended integrals
    if let Some(r) = &d.reduced {
        let from_integrals = match &d.integrals {
            Some((i1, i2)) => {
                let af = r.reduction.alpha_free(&[i1.clone(), i2.clone()], tol.symbolic)?;
                rep.push(CheckRecord::from_equiv("reduction.integrals_descend", "invariants of v3", &af, tol.symbolic, seed));
                let (j1, j2) = (r.reduction.descend(i1), r.reduction.descend(i2));
                h_from_integrals(&j1, &j2, &r.x_fields[0], &r.x_fields[1]).ok()
            }
            None => None,
        };
        d.hbar = match (fixture_pair(pf, "hbar1", "hbar2"), from_integrals) {
            (Some(h), Some(g)) => {
                if full {
                    rep.push(equiv_record(p, "hbar.from_integrals", "recovered from first integrals", &[g.0, g.1], &[h.0.clone(), h.1.clone()], tol.structure, Some(r))?);
                }
                Some(h)
            }
            (Some(h), None) => Some(h),
            (None, g) => g,
        };
        if full {
            if let Some((h1, h2)) = &d.hbar {
                rep.extend(verify_hs(r, h1, h2, tol.structure)?);
                let (_, recs) = beta_forms(r, h1, h2, tol.structure)?;
                rep.extend(recs);
            }
        }
    }

    // F1, F2: fixtures, then from the integrals, then from hbar
    let f_int = match &d.integrals {
        Some((i1, i2)) => f_from_integrals(p, i1, i2).ok(),
        None => None,
    };
    let f_h = match (&d.reduced, &d.hbar) {
        (Some(r), Some((h1, h2))) => f_from_h(r, h1, h2).ok(),
        _ => None,
    };
    d.f = fixture_pair(pf, "F1", "F2").or_else(|| f_int.clone()).or_else(|| f_h.clone());
    if let Some((f1, f2)) = &d.f {
        rep.artifact("F1", f1.to_string());
        rep.artifact("F2", f2.to_string());
        rep.extend(verify_tres(p, f1, f2, tol.structure)?);
        if full {
            for (id, g) in [("F.from_integrals", &f_int), ("F.from_h", &f_h)] {
                if let Some(g) = g {
                    rep.push(equiv_record(p, id, "the functions F1 and F2", &[g.0.clone(), g.1.clone()], &[f1.clone(), f2.clone()], tol.structure, None)?);
                }
            }
            if let Some((a, b)) = fixture_pair(pf, "F1_print", "F2_print") {
                rep.extend(prefixed("print.", verify_tres(p, &a, &b, tol.structure)?));
            }
        }
        let s = build_structures(p, f1, f2, tol.structure)?;
        rep.extend(s.records.clone());
        let w = omega_forms(&s.first)?;
        rep.extend(closure_ladder(p, &s.first, &w, tol.numeric)?);
        for (i, wi) in w.iter().enumerate() {
            rep.artifact(format!("omega{}", i + 1), wi.to_string());
        }
        if full {
            if let Some(printed) = pf.form("omega1") {
                rep.push(equiv_record(p, "fixture.omega1", "the 1-forms", &w[0].dense(), &printed.dense(), tol.symbolic, None)?);
            }
            if let (Some(t), Some((i1, i2))) = (pf.fixture("Theta3"), &d.integrals) {
                let r = verify_primitive(&p.probe, &w[0], t, &[i1.clone(), i2.clone()], tol.numeric)?;
                rep.push(CheckRecord::new("theta3.primitive", "a primitive of the corresponding 1-form", r.worst, tol.numeric, r.points, seed));
            }
        }
        d.omegas = Some(w);
    }

    // a complete set by the requested method
    let inputs = MethodInputs {
        f: d.f.clone(),
        omegas: d.omegas.clone(),
        i1: d.integrals.as_ref().map(|i| i.0.clone()),
        i2: d.integrals.as_ref().map(|i| i.1.clone()),
        theta3: pf.fixture("Theta3").cloned(),
        numeric_fallback: true,
        base: None,
    };
    match complete_integral_set(p, method, &inputs) {
        Ok(set) => {
            rep.push(set.record.clone());
            for m in &set.members {
                rep.artifact(format!("integral.{}", m.name()), m.describe());
            }
            d.set = Some(set);
        }
        Err(Sl2Error::Dependent { members, ratio }) => {
            let id = format!("integrals.method{}.independent", method as u8 + 1);
            rep.push(CheckRecord::new(id, "three independent first integrals", f64::INFINITY, 1.0, p.probe.points, seed));
            rep.artifact("integrals.dependent", format!("{} (sigma ratio {ratio:e})", members.join(", ")));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(d)
}

/// Check, then the structures, omega forms and a complete set of integrals
/// by `opts.method`. With `dump`, writes the derived objects there.
pub fn cmd_build(pf: &ProblemFile, opts: &RunOptions, dump: Option<&Path>) -> Result<VerificationReport, CliError> {
    opts.validate()?;
    let p = problem(pf, opts)?;
    let mut rep = report(&format!("build --method {}", opts.method as u8 + 1), pf, &p);
    check_stage(&p, &mut rep)?;
    if rep.pass() {
        derive(pf, &p, opts.method, false, &mut rep)?;
    }
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir)?;
        for a in &rep.artifacts {
            std::fs::write(dir.join(format!("{}.txt", a.name)), format!("{}\n", a.text))?;
        }
        std::fs::write(dir.join("report.json"), rep.to_json())?;
    }
    Ok(rep)
}

/// The full battery: `build` plus comparisons with every fixture, the
/// reduced side, Wronskians of the special-function pairs, constancy along
/// trajectories, explicit solutions and transformed equations.
pub fn cmd_verify(pf: &ProblemFile, opts: &RunOptions) -> Result<VerificationReport, CliError> {
    opts.validate()?;
    let p = problem(pf, opts)?;
    let mut rep = report("verify", pf, &p);
    check_stage(&p, &mut rep)?;
    if !rep.pass() {
        return Ok(rep);
    }
    pairs_stage(pf, &p, &mut rep)?;
    let d = derive(pf, &p, opts.method, true, &mut rep)?;
    trajectory_stage(pf, &p, opts, d.set.as_ref(), &mut rep)?;
    solution_stage(pf, &p, &mut rep)?;
    Ok(rep)
}

/// `verify` with Method 3 on a bundled problem.
pub fn cmd_example(name: &str, opts: &RunOptions) -> Result<VerificationReport, CliError> {
    let pf = bundled(name)?;
    let mut o = opts.clone();
    o.method = Method::Three;
    let mut rep = cmd_verify(&pf, &o)?;
    rep.environment.command = "example".into();
    Ok(rep)
}

/// `W(t) / exp(int_anchor^t p)` stays at its initial value.
fn pairs_stage(pf: &ProblemFile, p: &Sl2Problem, rep: &mut VerificationReport) -> Result<(), CliError> {
    const GRID: usize = 200;
    for pair in &pf.pairs {
        let spec = pair.spec();
        let ptape = Tape::compile(std::slice::from_ref(&spec.p), std::slice::from_ref(&spec.var), &pf.backend).map_err(Sl2Error::from)?;
        let (xs, ws) = crate::numint::gauss_legendre(16);
        let abel = |t: f64| {
            if spec.p.is_zero() {
                return 1.0;
            }
            let (a, b) = (spec.anchor, t);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let integral: f64 = xs.iter().zip(&ws).map(|(x, w)| w * ptape.eval1(&[mid + half * x]).unwrap_or(f64::NAN)).sum::<f64>() * half;
            integral.exp()
        };
        let drift = wronskian_drift(pair, abel, GRID).unwrap_or(f64::INFINITY);
        let id = format!("pair.{}.wronskian", spec.names.join("_"));
        rep.push(CheckRecord::new(id, "independent solutions", drift, WRONSKIAN_TOL, GRID + 1, p.probe.seed));
    }
    Ok(())
}

fn ode_tape(pf: &ProblemFile) -> Result<Tape, CliError> {
    let rhs = ode_system(&pf.phi, &pf.coords);
    Ok(Tape::compile(&rhs, pf.coords.names(), &pf.backend).map_err(Sl2Error::from)?)
}

/// Integrates the equation from `ic = (x, u, u1, u2)` over `length` in x.
pub fn integrate(pf: &ProblemFile, ic: &[f64], length: f64, tol: f64) -> Result<Trajectory, CliError> {
    let tape = ode_tape(pf)?;
    let mut regs = Vec::new();
    let mut pt = vec![0.0; ic.len()];
    let f = |x: f64, y: &[f64], out: &mut [f64]| {
        pt[0] = x;
        pt[1..].copy_from_slice(y);
        tape.eval_into(&pt, &mut regs, out)
    };
    dopri5(f, ic[0], &ic[1..], ic[0] + length, &RkOptions::proportional(tol)).map_err(|e| CliError::Sl2(Sl2Error::Num(e)))
}

/// A function of the jet point tracked along trajectories.
struct Tracked<'a> {
    name: String,
    eval: Box<dyn Fn(&[f64]) -> Result<f64, Sl2Error> + Sync + 'a>,
    numeric: bool,
}

fn tracked<'a>(pf: &ProblemFile, set: Option<&'a IntegralSet>) -> Result<Vec<Tracked<'a>>, CliError> {
    let mut out: Vec<Tracked<'a>> = Vec::new();
    if let Some(set) = set {
        for m in &set.members {
            out.push(Tracked {
                name: m.name().to_string(),
                eval: Box::new(move |x| m.eval(x)),
                numeric: !matches!(m, IntegralEvaluator::Closed { .. }),
            });
        }
    }
    // further closed-form integrals declared in the file
    for name in ["I1", "I2", "I3"] {
        if out.iter().any(|t| t.name == name) {
            continue;
        }
        if let Some(e) = pf.fixture(name) {
            let tape = Tape::compile(std::slice::from_ref(e), pf.coords.names(), &pf.backend).map_err(Sl2Error::from)?;
            out.push(Tracked {
                name: name.to_string(),
                eval: Box::new(move |x| Ok(tape.eval1(x)?)),
                numeric: false,
            });
        }
    }
    Ok(out)
}

fn trajectory_spec(pf: &ProblemFile, opts: &RunOptions) -> Option<TrajectorySpec> {
    let mut spec = match (&pf.trajectories, opts.trajectories) {
        (Some(s), _) => s.clone(),
        (None, Some(_)) => TrajectorySpec {
            count: 5,
            length: 0.5,
            tol: 1e-10,
            ic_box: pf.domain.clone(),
        },
        (None, None) => return None,
    };
    if let Some(k) = opts.trajectories {
        spec.count = k;
    }
    (spec.count > 0).then_some(spec)
}

/// Seeded initial conditions in the trajectory box at which `phi` and every
/// tracked function evaluate.
fn initial_conditions(pf: &ProblemFile, spec: &TrajectorySpec, seed: u64, tracked: &[Tracked<'_>]) -> Result<Vec<Vec<f64>>, CliError> {
    let phi = Tape::compile(std::slice::from_ref(&pf.phi), pf.coords.names(), &pf.backend).map_err(Sl2Error::from)?;
    let sampler = Sampler::new(&spec.ic_box).map_err(Sl2Error::from)?;
    let accept = |x: &[f64]| {
        phi.eval1(x).is_ok_and(f64::is_finite) && tracked.iter().filter(|t| !t.numeric).all(|t| (t.eval)(x).is_ok_and(f64::is_finite))
    };
    Ok(sampler.points(spec.count, seed ^ 0x7a1e_c70d, accept).map_err(Sl2Error::from)?)
}

fn drift_along(t: &Tracked<'_>, traj: &Trajectory) -> f64 {
    let n = traj.len();
    let idx: Vec<usize> = if t.numeric && n > NUMERIC_SAMPLES {
        (0..NUMERIC_SAMPLES).map(|k| k * (n - 1) / (NUMERIC_SAMPLES - 1)).collect()
    } else {
        (0..n).collect()
    };
    let vals: Vec<Result<f64, Sl2Error>> = idx.par_iter().map(|&i| (t.eval)(&traj.point(i))).collect();
    let mut it = vals.into_iter();
    let i0 = match it.next() {
        Some(Ok(v)) if v.is_finite() => v,
        _ => return f64::INFINITY,
    };
    let mut worst: f64 = 0.0;
    for v in it {
        match v {
            Ok(v) if v.is_finite() => worst = worst.max((v - i0).abs() / (1.0 + i0.abs())),
            _ => return f64::INFINITY,
        }
    }
    worst
}

/// Mean drift of closed-form integrals at `tol` and `tol / 2`.
pub struct HalvingReport {
    pub drift: f64,
    pub drift_half: f64,
}

impl HalvingReport {
    pub fn factor(&self) -> f64 {
        self.drift / self.drift_half
    }
}

/// Integrates each initial condition at `tol` and `tol / 2` and compares
/// the mean constancy drift of the closed-form integrals.
pub fn halving_report(pf: &ProblemFile, opts: &RunOptions, set: Option<&IntegralSet>) -> Result<Option<HalvingReport>, CliError> {
    let Some(spec) = trajectory_spec(pf, opts) else {
        return Ok(None);
    };
    let tr: Vec<Tracked<'_>> = tracked(pf, set)?.into_iter().filter(|t| !t.numeric).collect();
    let ics = initial_conditions(pf, &spec, opts.seed, &tr)?;
    let mut sums = [0.0; 2];
    for (k, tol) in [spec.tol, spec.tol / 2.0].into_iter().enumerate() {
        for ic in &ics {
            let traj = integrate(pf, ic, spec.length, tol)?;
            for t in &tr {
                sums[k] += drift_along(t, &traj);
            }
        }
    }
    let n = (ics.len() * tr.len()).max(1) as f64;
    Ok(Some(HalvingReport {
        drift: sums[0] / n,
        drift_half: sums[1] / n,
    }))
}

fn trajectory_stage(pf: &ProblemFile, p: &Sl2Problem, opts: &RunOptions, set: Option<&IntegralSet>, rep: &mut VerificationReport) -> Result<(), CliError> {
    let Some(spec) = trajectory_spec(pf, opts) else {
        return Ok(());
    };
    let seed = p.probe.seed;
    let tol = p.tol.numeric;
    let tr = tracked(pf, set)?;
    let ics = initial_conditions(pf, &spec, opts.seed, &tr)?;
    let mut trajs = Vec::new();
    for ic in &ics {
        match integrate(pf, ic, spec.length, spec.tol) {
            Ok(t) => trajs.push(t),
            Err(e) => {
                rep.push(failed("trajectory.integrate", "numerically integrated trajectory", tol, seed));
                rep.artifact("trajectory.error", format!("from {ic:?}: {e}"));
                return Ok(());
            }
        }
    }
    for t in &tr {
        let worst = trajs.iter().map(|traj| drift_along(t, traj)).fold(0.0, f64::max);
        rep.push(CheckRecord::new(format!("trajectory.{}", t.name), "first integrals", worst, tol, trajs.len(), seed));
    }
    if let Some(rs) = &pf.riccati {
        let names = pf.coords.names();
        let map = Tape::compile(&[rs.s.clone(), rs.m.clone()], names, &pf.backend).map_err(Sl2Error::from)?;
        let rhs = Tape::compile(std::slice::from_ref(&rs.rhs), &rs.vars, &pf.backend).map_err(Sl2Error::from)?;
        let mut worst: f64 = 0.0;
        for traj in &trajs {
            let d = transformed_ode_drift(traj, &map, &rhs, spec.tol).unwrap_or(f64::INFINITY);
            worst = worst.max(d);
        }
        rep.push(CheckRecord::new("riccati.drift", "is the riccati equation", worst, tol, trajs.len(), seed));
    }
    Ok(())
}

fn constant_expr(v: f64) -> Expr {
    match BigRational::from_float(v) {
        Some(r) => Expr::constant(r),
        None => Expr::zero(),
    }
}

fn solution_stage(pf: &ProblemFile, p: &Sl2Problem, rep: &mut VerificationReport) -> Result<(), CliError> {
    let Some(sol) = &pf.solution else {
        return Ok(());
    };
    let consts: std::collections::HashMap<Symbol, Expr> =
        sol.constants.iter().map(|(n, v)| (Symbol::from(n.as_str()), constant_expr(*v))).collect();
    let curve = [sol.x.subs(&consts), sol.u.subs(&consts)];
    let ctape = Tape::compile(&curve, std::slice::from_ref(&sol.param), &pf.backend).map_err(Sl2Error::from)?;
    let ptape = Tape::compile(std::slice::from_ref(&pf.phi), pf.coords.names(), &pf.backend).map_err(Sl2Error::from)?;
    let tol = p.tol.solution;
    let r = solution_residual(&ctape, &ptape, sol.span, SOLUTION_SAMPLES, SOLUTION_STEP, None);
    let (res, n) = match r {
        Ok(r) => (r.max, r.samples),
        Err(e) => {
            rep.artifact("solution.error", e.to_string());
            (f64::INFINITY, 0)
        }
    };
    rep.push(CheckRecord::new("solution.residual", "general solution", res, tol, n, p.probe.seed));
    Ok(())
}
