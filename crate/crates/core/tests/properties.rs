//! Algebraic and numerical invariants checked on random inputs.

use proptest::prelude::*;

use sl2quad::cli::{Environment, VerificationReport};
use sl2quad::expr::{parse_expr, Domain, Expr, FunctionBackend, Sampler, Scope, Symbol, Tape};
use sl2quad::jet::{lie_bracket, CoordSystem, DifferentialForm, VectorField};
use sl2quad::numint::{dopri5, integrate_compiled, PathSpec, RkOptions};
use sl2quad::sl2::CheckRecord;

const VARS: [&str; 4] = ["x", "u", "u1", "u2"];

fn coords() -> CoordSystem {
    CoordSystem::jet("x", "u", 2)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0..4usize).prop_map(|i| Expr::var(VARS[i])),
        (-3i64..=3).prop_map(Expr::int),
        (1i64..=4, 2i64..=5).prop_map(|(n, d)| Expr::ratio(n, d)),
    ]
}

/// Expressions that are finite on the unit box.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (Expr::int(2) + &b * &b)),
            inner.clone().prop_map(|a| a.powi(2)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| (Expr::int(1) + &a * &a).ln()),
            (0..4usize).prop_map(|i| Expr::var(VARS[i]).exp()),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

fn eval(es: &[Expr], p: &[f64]) -> Vec<f64> {
    let vars: Vec<Symbol> = VARS.iter().map(|v| Symbol::from(*v)).collect();
    Tape::compile(es, &vars, &FunctionBackend::new()).unwrap().eval(p).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// A field on (x, u) with random coefficients.
fn point_field() -> impl Strategy<Value = VectorField> {
    (expr(), expr()).prop_map(|(xi, eta)| {
        let c = CoordSystem::jet("x", "u", 0);
        let xi = xi.subs1("u1", &Expr::zero()).subs1("u2", &Expr::zero());
        let eta = eta.subs1("u1", &Expr::zero()).subs1("u2", &Expr::zero());
        VectorField::from_named(&c, &[("x", xi), ("u", eta)]).unwrap()
    })
}

fn jet_field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(expr(), 4).prop_map(|cs| {
        let c = coords();
        let named: Vec<(&str, Expr)> = VARS.iter().copied().zip(cs).collect();
        VectorField::from_named(&c, &named).unwrap()
    })
}

fn one_form() -> impl Strategy<Value = DifferentialForm> {
    prop::collection::vec(expr(), 4).prop_map(|cs| DifferentialForm::one_form(&coords(), &cs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back(e in expr(), p in point()) {
        let text = e.to_string();
        let back = parse_expr(&text, &Scope::new(&VARS)).unwrap();
        let v = eval(&[e, back], &p);
        prop_assert!(close(v[0], v[1], 1e-12), "{text}: {} vs {}", v[0], v[1]);
    }

    #[test]
    fn derivative_matches_central_difference(e in expr(), p in point(), k in 0..4usize) {
        let d = e.diff(VARS[k]);
        let h = 1e-5;
        let (mut lo, mut hi) = (p.clone(), p.clone());
        lo[k] -= h;
        hi[k] += h;
        let fd = (eval(std::slice::from_ref(&e), &hi)[0] - eval(std::slice::from_ref(&e), &lo)[0]) / (2.0 * h);
        let exact = eval(&[d], &p)[0];
        prop_assert!(close(exact, fd, 1e-5), "{e}: {exact} vs {fd}");
    }

    #[test]
    fn total_derivative_is_a_derivation(f in expr(), g in expr(), phi in expr(), p in point()) {
        let c = coords();
        let d = |e: &Expr| c.total_derivative(e, Some(&phi)).unwrap();
        let lhs = d(&(&f * &g));
        let rhs = &d(&f) * &g + &f * &d(&g);
        let v = eval(&[lhs, rhs], &p);
        prop_assert!(close(v[0], v[1], 1e-10));
    }

    #[test]
    fn jacobi_identity(x in point_field(), y in point_field(), z in point_field(), p in point()) {
        let b = |a: &VectorField, c: &VectorField| lie_bracket(a, c).unwrap();
        let sum = b(&x, &b(&y, &z)).add(&b(&y, &b(&z, &x))).add(&b(&z, &b(&x, &y)));
        let scale: f64 = [&x, &y, &z]
            .iter()
            .flat_map(|f| eval(&f.dense(), &p))
            .fold(1.0, |a: f64, v| a.max(v.abs()));
        for v in eval(&sum.dense(), &p) {
            prop_assert!(v.abs() <= 1e-9 * scale.powi(3).max(1.0), "{v}");
        }
    }

    #[test]
    fn bracket_is_the_commutator(x in jet_field(), y in jet_field(), f in expr(), p in point()) {
        let lhs = lie_bracket(&x, &y).unwrap().apply(&f);
        let rhs = x.apply(&y.apply(&f)) - y.apply(&x.apply(&f));
        let v = eval(&[lhs, rhs], &p);
        prop_assert!(close(v[0], v[1], 1e-9), "{} vs {}", v[0], v[1]);
    }

    #[test]
    fn d_squared_vanishes(f in expr(), w in one_form(), p in point()) {
        let c = coords();
        let ddf = DifferentialForm::d(&c, &f).exterior_derivative().unwrap();
        let ddw = w.exterior_derivative().unwrap().exterior_derivative().unwrap();
        for v in eval(&ddf.dense(), &p).into_iter().chain(eval(&ddw.dense(), &p)) {
            prop_assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn contraction_of_df_is_the_derivative(f in expr(), x in jet_field(), p in point()) {
        let c = coords();
        let lhs = DifferentialForm::d(&c, &f).pair(&x).unwrap();
        let v = eval(&[lhs, x.apply(&f)], &p);
        prop_assert!(close(v[0], v[1], 1e-12));
    }

    #[test]
    fn double_contraction_vanishes(a in one_form(), b in one_form(), x in jet_field(), p in point()) {
        let w = a.wedge(&b).unwrap();
        let xx = w.interior(&x).unwrap().interior(&x).unwrap();
        let v = eval(&[xx.as_scalar()], &p)[0];
        prop_assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn sampler_is_seeded_and_stays_in_the_box(seed in any::<u64>(), n in 1usize..40) {
        let d = Domain::new(&[("x", -1.0, 2.0), ("u", 0.5, 0.75)]);
        let s = Sampler::new(&d).unwrap();
        let a = s.points(n, seed, |_| true).unwrap();
        let b = s.points(n, seed, |_| true).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), n);
        for p in &a {
            prop_assert!(d.contains(p));
        }
    }

    #[test]
    fn dense_output_reproduces_the_nodes(y0 in -2.0f64..2.0, v0 in -2.0f64..2.0, len in 0.5f64..4.0) {
        let t = dopri5(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
                Ok(())
            },
            0.0,
            &[y0, v0],
            len,
            &RkOptions::tol(1e-9),
        )
        .unwrap();
        for i in 0..t.len() {
            let at = t.at(t.xs[i]).unwrap();
            for (a, b) in at.iter().zip(&t.ys[i]) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
        prop_assert!(t.xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn path_and_its_reversal_cancel(w in one_form(), a in point(), b in point()) {
        let tape = w.compile(&FunctionBackend::new()).unwrap();
        let there = integrate_compiled(&tape, &PathSpec::straight(a.clone(), b.clone())).unwrap();
        let back = integrate_compiled(&tape, &PathSpec::straight(b, a)).unwrap();
        prop_assert!((there + back).abs() < 1e-9 * (1.0 + there.abs()));
    }

    #[test]
    fn exact_forms_integrate_to_differences(f in expr(), a in point(), b in point()) {
        let w = DifferentialForm::d(&coords(), &f);
        let tape = w.compile(&FunctionBackend::new()).unwrap();
        let got = integrate_compiled(&tape, &PathSpec::straight(a.clone(), b.clone())).unwrap();
        let want = eval(std::slice::from_ref(&f), &b)[0] - eval(std::slice::from_ref(&f), &a)[0];
        prop_assert!(close(got, want, 1e-8), "{got} vs {want}");
    }

    #[test]
    fn reports_round_trip(
        recs in prop::collection::vec(("[a-z]{1,8}(\\.[a-z0-9_]{1,6}){0,2}", "[a-z ]{0,20}", any::<f64>(), 1e-14f64..1.0, 0usize..500, any::<u64>()), 0..12),
        seed in any::<u64>(),
    ) {
        let mut rep = VerificationReport::new(Environment {
            tool: "sl2quad".into(),
            version: "0".into(),
            command: "verify".into(),
            problem: "p".into(),
            seed,
            points: 100,
        });
        for (id, anchor, r, tol, n, s) in recs {
            rep.push(CheckRecord::new(id, &anchor, r, tol, n, s));
        }
        let json = rep.to_json();
        let back = VerificationReport::from_json(&json).unwrap();
        prop_assert_eq!(&back, &rep);
        prop_assert_eq!(back.to_json(), json);
        prop_assert_eq!(rep.pass(), rep.records.iter().all(|r| r.pass));
    }
}
