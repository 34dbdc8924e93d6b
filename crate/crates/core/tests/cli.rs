//! Exit codes, determinism and report output of the command line.

use std::path::PathBuf;
use std::process::Command;

use sl2quad::cli::{run, VerificationReport};

fn problem(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name).display().to_string()
}

fn sl2quad(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["sl2quad"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn edited(file: &str, from: &str, to: &str) -> tempfile::NamedTempFile {
    let text = std::fs::read_to_string(problem(file)).unwrap();
    assert!(text.contains(from), "{from}");
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text.replacen(from, to, 1)).unwrap();
    f
}

#[test]
fn check_example1_passes_with_six_records() {
    let (code, out, _) = sl2quad(&["check", &problem("example1.problem")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("check airy: 6 of 6 checks passed (seed 0x5128)\n"), "{out}");
}

#[test]
fn check_example2_passes() {
    let (code, out, _) = sl2quad(&["check", &problem("example2.problem")]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn v2_without_the_u_part_fails_the_symmetry_check() {
    let f = edited("example2.problem", "v2.eta = 2*x*u\n", "");
    let (code, out, _) = sl2quad(&["check", f.path().to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.lines().any(|l| l.starts_with("symmetry.v2") && l.ends_with("FAIL")), "{out}");
}

#[test]
fn parse_errors_exit_2_with_a_position() {
    let f = edited("example1.problem", "u3 = ", "u3 = (");
    let (code, _, err) = sl2quad(&["check", f.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line "), "{err}");
}

#[test]
fn missing_file_exits_2() {
    let (code, _, err) = sl2quad(&["check", "/nonexistent/file.problem"]);
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/file.problem"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let p = problem("example1.problem");
    for args in [
        vec!["verify", p.as_str(), "--points", "0"],
        vec!["verify", p.as_str(), "--tol", "-1"],
        vec!["build", p.as_str(), "--method", "4"],
        vec!["build", p.as_str()],
        vec!["check"],
        vec!["frobnicate"],
        vec!["check", p.as_str(), "--seed", "0xZZ"],
    ] {
        let (code, _, err) = sl2quad(&args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn unknown_example_lists_the_available_ones() {
    let (code, _, err) = sl2quad(&["example", "heat"]);
    assert_eq!(code, 2);
    assert!(err.contains("airy") && err.contains("schrodinger"), "{err}");
}

#[test]
fn help_exits_0() {
    let (code, out, _) = sl2quad(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("example"));
}

#[test]
fn build_methods_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    for (file, method) in [("example1.problem", "2"), ("example1.problem", "3"), ("example2.problem", "3")] {
        let d = dir.path().join(format!("{file}-{method}"));
        let (code, out, err) = sl2quad(&["build", &problem(file), "--method", method, "--dump", d.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}{err}");
        for f in ["F1.txt", "F2.txt", "omega1.txt", "omega2.txt", "omega3.txt", "report.json"] {
            assert!(d.join(f).exists(), "{file} {method}: {f}");
        }
        let rep = VerificationReport::from_json(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        let id = format!("integrals.method{method}.independent");
        assert!(rep.record(&id).is_some_and(|r| r.pass), "{id}");
        let names: Vec<String> = rep.artifacts.iter().filter_map(|a| a.name.strip_prefix("integral.").map(str::to_string)).collect();
        let want: &[&str] = match (file, method) {
            ("example1.problem", "2") => &["I1", "F1", "F2"],
            _ => &["I1", "I2", "Theta3"],
        };
        assert_eq!(names, want, "{file} {method}");
    }
}

#[test]
fn verify_writes_json_to_stdout_or_a_file() {
    let p = problem("example1.problem");
    let (code, out, _) = sl2quad(&["verify", &p, "--points", "30", "--trajectories", "2"]);
    assert_eq!(code, 0);
    let rep = VerificationReport::from_json(&out).unwrap();
    assert!(rep.pass());
    assert_eq!(rep.environment.points, 30);
    assert_eq!(rep.records.iter().filter(|r| r.id.starts_with("trajectory.")).map(|r| r.points).max(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, table, _) = sl2quad(&["verify", &p, "--points", "30", "--trajectories", "2", "--json", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(table.contains("checks passed"));
    assert_eq!(std::fs::read_to_string(path).unwrap(), out);
}

#[test]
fn a_new_seed_keeps_verdicts_and_moves_points() {
    let p = problem("example2.problem");
    let (_, a, _) = sl2quad(&["verify", &p, "--seed", "1", "--points", "40"]);
    let (_, b, _) = sl2quad(&["verify", &p, "--seed", "0x2a", "--points", "40"]);
    let (a, b) = (VerificationReport::from_json(&a).unwrap(), VerificationReport::from_json(&b).unwrap());
    assert_eq!(b.environment.seed, 42);
    let verdicts = |r: &VerificationReport| r.records.iter().map(|x| (x.id.clone(), x.pass)).collect::<Vec<_>>();
    assert_eq!(verdicts(&a), verdicts(&b));
    assert!(a.pass());
    let residuals_differ = a.records.iter().zip(&b.records).any(|(x, y)| x.residual != y.residual);
    assert!(residuals_differ);
}

#[test]
fn a_tight_symbolic_tolerance_fails_with_exit_1() {
    let p = problem("example1.problem");
    let (code, out, _) = sl2quad(&["verify", &p, "--tol", "1e-30", "--trajectories", "1"]);
    assert_eq!(code, 1);
    let rep = VerificationReport::from_json(&out).unwrap();
    assert!(!rep.summary.failed.is_empty());
    assert!(rep.summary.failed.iter().all(|id| rep.record(id).is_some_and(|r| !r.pass)));
}

#[test]
fn binary_examples_are_byte_deterministic() {
    let exe = env!("CARGO_BIN_EXE_sl2quad");
    for name in ["airy", "schrodinger"] {
        let a = Command::new(exe).args(["example", name]).env_remove("SL2QUAD_SEED").output().unwrap();
        let b = Command::new(exe).args(["example", name]).env_remove("SL2QUAD_SEED").output().unwrap();
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn seed_env_var_sets_the_default() {
    let exe = env!("CARGO_BIN_EXE_sl2quad");
    let out = Command::new(exe).args(["check", &problem("example1.problem")]).env("SL2QUAD_SEED", "0x10").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("(seed 0x10)"));
    let bad = Command::new(exe).args(["check", &problem("example1.problem")]).env("SL2QUAD_SEED", "nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
