use nalgebra::DMatrix;

use super::*;
use crate::cli::ProblemFile;
use crate::expr::Expr;

const EX1: &str = include_str!("../../problems/example1.problem");
const EX2: &str = include_str!("../../problems/example2.problem");

fn load(text: &str) -> ProblemFile {
    ProblemFile::parse(text).unwrap()
}

fn edited(text: &str, from: &str, to: &str) -> ProblemFile {
    assert!(text.contains(from), "`{from}` not in problem text");
    load(&text.replace(from, to))
}

fn assert_pass(recs: &[CheckRecord]) {
    for r in recs {
        assert!(r.pass, "{} failed: residual {:e} > {:e}", r.id, r.residual, r.tol);
    }
}

fn fx(pf: &ProblemFile, name: &str) -> Expr {
    pf.fixture(name).unwrap().clone()
}

#[test]
fn example1_chain() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let rel = check_sl2_relations(&p.gens, &p.probe, p.tol.relations).unwrap();
    assert!(rel.pass);
    assert_pass(&rel.records);
    assert_pass(&p.symmetry_checks().unwrap());

    let rp = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    assert_pass(&rp.records);
    let probe = &rp.reduction.probe;
    assert!(probe.equiv1(&rp.reduction.phi_red, &fx(&pf, "phi_red"), 1e-10).unwrap().pass);
    for (i, k) in [(0, "1"), (1, "2")] {
        assert!(probe.equiv1(&rp.inherited[i].lambda, &fx(&pf, &format!("lambda{k}")), 1e-10).unwrap().pass);
        assert!(probe.equiv1(&rp.lambda_q[i], &fx(&pf, &format!("lambdaQ{k}")), 1e-10).unwrap().pass);
    }

    let (h1, h2) = (fx(&pf, "hbar1"), fx(&pf, "hbar2"));
    assert_pass(&verify_hs(&rp, &h1, &h2, 1e-8).unwrap());
    let i1r = rp.reduction.descend(&fx(&pf, "I1"));
    let i2r = rp.reduction.descend(&fx(&pf, "I2"));
    let (g1, g2) = h_from_integrals(&i1r, &i2r, &rp.x_fields[0], &rp.x_fields[1]).unwrap();
    assert!(probe.equiv(&[g1, g2], &[h1.clone(), h2.clone()], 1e-8).unwrap().pass);
    let (_, recs) = beta_forms(&rp, &h1, &h2, 1e-8).unwrap();
    assert_pass(&recs);

    let (i1, i2) = (fx(&pf, "I1"), fx(&pf, "I2"));
    assert_pass(&check_first_integrals(&p, &i1, &i2, 1e-8).unwrap());
    let (f1, f2) = (fx(&pf, "F1"), fx(&pf, "F2"));
    let fi = f_from_integrals(&p, &i1, &i2).unwrap();
    let fh = f_from_h(&rp, &h1, &h2).unwrap();
    assert!(p.probe.equiv(&[fi.0, fi.1], &[f1.clone(), f2.clone()], 1e-8).unwrap().pass);
    assert!(p.probe.equiv(&[fh.0, fh.1], &[f1.clone(), f2.clone()], 1e-8).unwrap().pass);
    assert_pass(&verify_tres(&p, &f1, &f2, 1e-8).unwrap());
    assert_pass(&verify_tres(&p, &fx(&pf, "F1_print"), &fx(&pf, "F2_print"), 1e-8).unwrap());

    let s = build_structures(&p, &f1, &f2, 1e-8).unwrap();
    assert_pass(&s.records);
    let w = omega_forms(&s.first).unwrap();
    assert_pass(&closure_ladder(&p, &s.first, &w, 1e-6).unwrap());
    let printed = pf.form("omega1").unwrap();
    assert!(p.probe.equiv(&w[0].dense(), &printed.dense(), 1e-10).unwrap().pass);
    let r = verify_primitive(&p.probe, &w[0], &fx(&pf, "Theta3"), &[i1, i2], 1e-6).unwrap();
    assert!(r.pass, "Theta3 primitive residual {:e}", r.worst);
}

#[test]
fn example2_chain() {
    let pf = load(EX2);
    let p = pf.problem(7).unwrap();
    assert!(check_sl2_relations(&p.gens, &p.probe, p.tol.relations).unwrap().pass);
    assert_pass(&p.symmetry_checks().unwrap());
    let (i1, i2) = (fx(&pf, "I1"), fx(&pf, "I2"));
    assert_pass(&check_first_integrals(&p, &i1, &i2, 1e-8).unwrap());
    let (f1, f2) = f_from_integrals(&p, &i1, &i2).unwrap();
    assert_pass(&verify_tres(&p, &f1, &f2, 1e-8).unwrap());
    let s = build_structures(&p, &f1, &f2, 1e-8).unwrap();
    assert_pass(&s.records);
    let w = omega_forms(&s.first).unwrap();
    assert_pass(&closure_ladder(&p, &s.first, &w, 1e-6).unwrap());
    let r = verify_primitive(&p.probe, &w[0], &fx(&pf, "Theta3"), &[i1.clone(), i2.clone()], 1e-6).unwrap();
    assert!(r.pass, "Theta3 primitive residual {:e}", r.worst);

    // the reduced side, with hbar recovered from the descended integrals
    let rp = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    assert_pass(&rp.records);
    assert!(rp.reduction.alpha_free(&[i1.clone(), i2.clone()], 1e-10).unwrap().pass);
    let i1r = rp.reduction.descend(&i1);
    let i2r = rp.reduction.descend(&i2);
    let (h1, h2) = h_from_integrals(&i1r, &i2r, &rp.x_fields[0], &rp.x_fields[1]).unwrap();
    assert_pass(&verify_hs(&rp, &h1, &h2, 1e-8).unwrap());
    let (fa, fb) = f_from_h(&rp, &h1, &h2).unwrap();
    assert!(p.probe.equiv(&[fa, fb], &[f1, f2], 1e-8).unwrap().pass);
}

#[test]
fn non_sl2_basis_is_reported() {
    // (d_x, d_u, x d_x): [v1, v2] = 0, not 2 v3
    let pf = edited(EX1, "v2.xi = x^2", "v2.eta = 1");
    let p = pf.problem(7).unwrap();
    let rel = check_sl2_relations(&p.gens, &p.probe, p.tol.relations).unwrap();
    assert!(!rel.pass);
    assert_eq!(rel.failing.as_deref(), Some("[v1,v2] = 2 v3"));
    assert!(rel.constants[0].iter().all(|c| c.abs() < 1e-10), "{:?}", rel.constants);
}

#[test]
fn fitted_constants_of_sl2() {
    let pf = load(EX2);
    let p = pf.problem(7).unwrap();
    let rel = check_sl2_relations(&p.gens, &p.probe, p.tol.relations).unwrap();
    let want = [[0.0, 0.0, 2.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    for k in 0..3 {
        for j in 0..3 {
            assert!((rel.constants[k][j] - want[k][j]).abs() < 1e-10, "{:?}", rel.constants);
        }
    }
}

#[test]
fn v2_without_eta_is_not_a_symmetry() {
    let pf = edited(EX2, "v2.eta = 2*x*u\n", "");
    let p = pf.problem(7).unwrap();
    let recs = p.symmetry_checks().unwrap();
    assert!(recs[0].pass && recs[2].pass);
    assert!(!recs[1].pass);
}

#[test]
fn non_invariant_y_is_rejected() {
    let pf = edited(EX1, "y = u\n", "y = x\n");
    let p = pf.problem(7).unwrap();
    match reduce_with_v3(&p, pf.reduction.as_ref().unwrap()) {
        Err(Sl2Error::NotInvariant(which)) => assert_eq!(which, "x"),
        other => panic!("expected NotInvariant, got {other:?}"),
    }
}

#[test]
fn wrong_section_is_caught() {
    let pf = edited(EX1, "section.u = y", "section.u = 2*y");
    let p = pf.problem(7).unwrap();
    match reduce_with_v3(&p, pf.reduction.as_ref().unwrap()) {
        Err(Sl2Error::Degenerate(msg)) => assert!(msg.contains("section map"), "{msg}"),
        other => panic!("expected a section failure, got {other:?}"),
    }
}

#[test]
fn unit_constant_in_example2_breaks_integrals() {
    // the equation with constant 1 in place of 1/8
    let pf = edited(EX2, "u3 = -1/(8*u^2*", "u3 = -1/(u^2*");
    let p = pf.problem(7).unwrap();
    let recs = check_first_integrals(&p, &fx(&pf, "I1"), &fx(&pf, "I2"), 1e-8).unwrap();
    for r in recs.iter().filter(|r| r.id.ends_with(".A")) {
        assert!(!r.pass, "{} unexpectedly passes", r.id);
    }
    // the symmetry algebra does not see the constant
    assert_pass(&p.symmetry_checks().unwrap());
}

#[test]
fn unit_f_fails_tres() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let recs = verify_tres(&p, &Expr::one(), &fx(&pf, "F2"), 1e-8).unwrap();
    assert!(!recs.iter().find(|r| r.id == "tres.v3_F1").unwrap().pass);
    assert!(recs.iter().filter(|r| r.id.ends_with("F2")).all(|r| r.pass));
}

#[test]
fn f_scaling_invariance() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let f1 = Expr::int(3) * fx(&pf, "F1");
    let f2 = Expr::ratio(-2, 7) * fx(&pf, "F2");
    assert_pass(&verify_tres(&p, &f1, &f2, 1e-8).unwrap());
    assert_pass(&build_structures(&p, &f1, &f2, 1e-8).unwrap().records);
}

#[test]
fn zero_hbar_is_rejected() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let rp = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    assert!(matches!(verify_hs(&rp, &Expr::zero(), &fx(&pf, "hbar2"), 1e-8), Err(Sl2Error::Degenerate(_))));
    assert!(matches!(beta_forms(&rp, &fx(&pf, "hbar1"), &Expr::zero(), 1e-8), Err(Sl2Error::Degenerate(_))));
}

#[test]
fn hbar_up_to_a_constant_still_solves_hs() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let rp = ReducedProblem::build(&p, pf.reduction.as_ref().unwrap()).unwrap();
    let h1 = Expr::int(5) * fx(&pf, "hbar1");
    assert_pass(&verify_hs(&rp, &h1, &fx(&pf, "hbar2"), 1e-8).unwrap());
    let recs = verify_hs(&rp, &fx(&pf, "hbar2"), &fx(&pf, "hbar2"), 1e-8).unwrap();
    assert!(!recs.iter().find(|r| r.id == "hs.A_h1").unwrap().pass);
}

#[test]
fn method3_without_theta3_is_missing() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let inputs = MethodInputs {
        i1: Some(fx(&pf, "I1")),
        i2: Some(fx(&pf, "I2")),
        ..Default::default()
    };
    assert!(matches!(complete_integral_set(&p, Method::Three, &inputs), Err(Sl2Error::Missing(_))));
    assert!(matches!(Method::try_from(4), Err(Sl2Error::Missing(_))));
}

#[test]
fn all_methods_give_independent_sets() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let (f1, f2) = (fx(&pf, "F1"), fx(&pf, "F2"));
    let s = build_structures(&p, &f1, &f2, 1e-8).unwrap();
    let inputs = MethodInputs {
        f: Some((f1, f2)),
        omegas: Some(omega_forms(&s.first).unwrap()),
        i1: Some(fx(&pf, "I1")),
        i2: Some(fx(&pf, "I2")),
        theta3: Some(fx(&pf, "Theta3")),
        numeric_fallback: true,
        base: None,
    };
    for m in [Method::One, Method::Two, Method::Three] {
        let set = complete_integral_set(&p, m, &inputs).unwrap();
        assert!(set.record.pass, "method {m:?}: ratio {:e}", set.min_ratio);
        assert_eq!(set.members.len(), 3);
    }
}

#[test]
fn dependent_set_is_rejected() {
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let i1 = fx(&pf, "I1");
    let inputs = MethodInputs {
        i1: Some(i1.clone()),
        i2: Some(fx(&pf, "I2")),
        theta3: Some(&i1 * &i1),
        ..Default::default()
    };
    match complete_integral_set(&p, Method::Three, &inputs) {
        Err(Sl2Error::Dependent { members, .. }) => assert_eq!(members, ["I1", "I2", "Theta3"]),
        other => panic!("expected Dependent, got {other:?}"),
    }
}

#[test]
fn theta1_depends_on_i1() {
    // omega3 is closed and kills A, v3 and F1 v1, so its primitive is a
    // function of the integral killed by v1
    let pf = load(EX1);
    let p = pf.problem(7).unwrap();
    let s = build_structures(&p, &fx(&pf, "F1"), &fx(&pf, "F2"), 1e-8).unwrap();
    let w = omega_forms(&s.first).unwrap();
    let i1 = fx(&pf, "I1");
    let mut exprs = w[2].dense();
    exprs.extend(p.coords.names().iter().map(|v| i1.diff(v)));
    let (tape, pts) = p.probe.with_points(50).sample(&exprs).unwrap();
    assert_eq!(pts.len(), 50);
    for x in &pts {
        let v = tape.eval(x).unwrap();
        let sv = DMatrix::from_row_slice(2, 4, &v).singular_values();
        assert!(sv.min() < 1e-6 * sv.max(), "{sv:?} at {x:?}");
    }
}

#[test]
fn find_varsigma_example2() {
    let pf = load(EX2);
    let p = pf.problem(7).unwrap();
    let (s1, s2) = find_varsigma(&p.gens[2], &p.probe, 1e-10).unwrap();
    let x = Expr::var("x");
    assert!(p.probe.equiv(&[s1, s2], &[x.clone(), x.recip()], 1e-12).unwrap().pass);
}
