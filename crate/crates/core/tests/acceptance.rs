//! The twelve acceptance criteria, each at its stated tolerance. Prints one
//! line per criterion and exits nonzero if any fails.

use std::time::{Duration, Instant};

use sl2quad::cli::{bundled, cmd_example, ProblemFile, RunOptions, VerificationReport, DEFAULT_SEED};
use sl2quad::expr::{parse_expr, Expr};
use sl2quad::jet::VectorField;
use sl2quad::sl2::{check_sl2_relations, f_from_integrals, ReducedProblem};

struct Outcome {
    pass: bool,
    detail: String,
}

/// Worst residual over the named records, each required below `tol`.
fn records(reps: &[&VerificationReport], ids: &[&str], tol: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut missing = Vec::new();
    let mut bad = Vec::new();
    for rep in reps {
        for id in ids {
            let matches: Vec<_> = rep
                .records
                .iter()
                .filter(|r| match id.strip_suffix('*') {
                    Some(prefix) => r.id.starts_with(prefix),
                    None => r.id == *id,
                })
                .collect();
            if matches.is_empty() {
                missing.push(format!("{}:{id}", rep.environment.problem));
            }
            for r in matches {
                worst = worst.max(r.residual);
                if !(r.residual < tol) {
                    bad.push(format!("{}:{}", rep.environment.problem, r.id));
                }
            }
        }
    }
    let pass = missing.is_empty() && bad.is_empty();
    let mut detail = format!("worst {worst:.2e} < {tol:.0e}");
    if !missing.is_empty() {
        detail.push_str(&format!("; missing {}", missing.join(", ")));
    }
    if !bad.is_empty() {
        detail.push_str(&format!("; over tolerance {}", bad.join(", ")));
    }
    Outcome { pass, detail }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    Outcome {
        pass: a.pass && b.pass,
        detail: format!("{}; {}", a.detail, b.detail),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn brackets(pf: &ProblemFile) -> (f64, Duration) {
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let (rep, dt) = timed(|| check_sl2_relations(&p.gens, &p.probe, 1e-12).unwrap());
    let worst = rep.records.iter().map(|r| r.residual).fold(0.0, f64::max);
    assert_eq!(p.probe.points, 100);
    (worst, dt)
}

/// The printed X1, X2 against those built by canonical_rep.
fn printed_x_fields(pf: &ProblemFile) -> f64 {
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let r = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    let c = &r.reduction.red;
    let s = c.scope();
    let mut worst: f64 = 0.0;
    for (i, coeff) in ["-w + w1/w", "w + w1/w"].iter().enumerate() {
        let x = VectorField::from_named(c, &[("w", Expr::one()), ("w1", parse_expr(coeff, &s).unwrap())]).unwrap();
        let e = r.x_fields[i].equiv(&x, &r.reduction.probe, 1e-8).unwrap();
        worst = worst.max(e.worst);
    }
    worst
}

/// Informational: the F's exactly as printed (Psi_1 in the numerators)
/// against those derived from the integrals.
fn uncorrected_print(pf: &ProblemFile) -> f64 {
    let p = pf.problem(DEFAULT_SEED).unwrap();
    let (f1, f2) = f_from_integrals(&p, pf.fixture("I1").unwrap(), pf.fixture("I2").unwrap()).unwrap();
    let printed = [pf.fixture("F1_print").unwrap().clone(), pf.fixture("F2_print").unwrap().clone()];
    p.probe.equiv(&[f1, f2], &printed, 1e-8).unwrap().worst
}

fn main() {
    let opts = RunOptions::new(DEFAULT_SEED);
    let airy = bundled("airy").unwrap();
    let schro = bundled("schrodinger").unwrap();

    let (r1, t1) = timed(|| cmd_example("airy", &opts).unwrap());
    let (r2, t2) = timed(|| cmd_example("schrodinger", &opts).unwrap());
    let again1 = cmd_example("airy", &opts).unwrap();
    let again2 = cmd_example("schrodinger", &opts).unwrap();

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    let (b1, d1) = brackets(&airy);
    let (b2, d2) = brackets(&schro);
    let fast = d1 < Duration::from_secs(1) && d2 < Duration::from_secs(1);
    results.push((
        1,
        "sl(2,R) brackets at 100 points",
        Outcome {
            pass: b1 < 1e-12 && b2 < 1e-12 && fast,
            detail: format!(
                "worst {:.2e} < 1e-12; {:.0} ms and {:.0} ms < 1 s",
                b1.max(b2),
                d1.as_secs_f64() * 1e3,
                d2.as_secs_f64() * 1e3
            ),
        },
    ));

    results.push((2, "symmetry conditions", records(&[&r1, &r2], &["symmetry.v1", "symmetry.v2", "symmetry.v3"], 1e-10)));

    results.push((3, "reduced equation of Example I", records(&[&r1], &["fixture.phi_red"], 1e-10)));

    let xw = printed_x_fields(&airy);
    let c4 = records(&[&r1], &["canonical1.bracket", "canonical2.bracket", "canonical.rho"], 1e-8);
    results.push((
        4,
        "canonical representatives X1, X2",
        both(
            Outcome {
                pass: xw < 1e-8,
                detail: format!("printed X1, X2 {xw:.2e} < 1e-8"),
            },
            c4,
        ),
    ));

    results.push((
        5,
        "hbar systems with the Airy pair",
        both(records(&[&r1], &["hs.*"], 1e-8), records(&[&r1], &["pair.Psi1_Psi2.wronskian"], 1e-9)),
    ));

    results.push((
        6,
        "F-functions",
        both(
            records(&[&r1], &["print.tres.*", "tres.*"], 1e-8),
            records(&[&r1], &["F.from_h", "F.from_integrals"], 1e-8),
        ),
    ));

    results.push((7, "solvable structures", records(&[&r1, &r2], &["structure.first", "structure.second", "cuentas.*"], 1e-8)));

    results.push((
        8,
        "omega forms",
        both(
            records(&[&r1], &["fixture.omega1"], 1e-10),
            records(
                &[&r1, &r2],
                &["omega3.closed_symbolic", "omega3.closed_fd", "omega2.closed_symbolic", "omega2.closed_fd", "omega1.ideal"],
                1e-6,
            ),
        ),
    ));

    let traj_ok = [(&airy, &r1), (&schro, &r2)].iter().all(|(pf, rep)| {
        let t = pf.trajectories.as_ref().unwrap();
        t.count == 5 && t.tol == 1e-10 && rep.records.iter().filter(|r| r.id.starts_with("trajectory.")).all(|r| r.points == 5)
    });
    let c9 = both(
        records(&[&r1], &["trajectory.I1", "trajectory.I2", "trajectory.Theta3"], 1e-6),
        records(&[&r2], &["trajectory.I1", "trajectory.I2", "trajectory.I3", "theta3.primitive"], 1e-6),
    );
    let c9 = both(c9, records(&[&r1], &["theta3.primitive"], 1e-6));
    results.push((
        9,
        "first integrals along trajectories",
        Outcome {
            pass: c9.pass && traj_ok,
            detail: format!("{}; 5 trajectories at tol 1e-10: {traj_ok}", c9.detail),
        },
    ));

    results.push((10, "general solutions", records(&[&r1, &r2], &["solution.residual"], 1e-4)));

    results.push((11, "Riccati remark", records(&[&r1], &["riccati.drift"], 1e-6)));

    let deterministic = r1.to_json() == again1.to_json() && r2.to_json() == again2.to_json();
    let all_pass = r1.pass() && r2.pass();
    results.push((
        12,
        "full example runs",
        Outcome {
            pass: t1 < Duration::from_secs(60) && t2 < Duration::from_secs(60) && deterministic && all_pass,
            detail: format!(
                "airy {:.2} s, schrodinger {:.2} s < 60 s; deterministic {deterministic}; all records pass {all_pass}",
                t1.as_secs_f64(),
                t2.as_secs_f64()
            ),
        },
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "info: F1, F2 exactly as printed (Psi1 numerators) vs derived from the integrals: {:.2e} (expected to differ)",
        uncorrected_print(&airy)
    );
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
