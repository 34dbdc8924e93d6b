//! Run the full battery on a problem file and print the JSON report.
//!
//! cargo run --example verify_report -- crates/core/problems/example2.problem

use sl2quad::cli::{cmd_verify, load, RunOptions, DEFAULT_SEED};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/problems/example1.problem").into());
    let pf = load(std::path::Path::new(&path)).unwrap_or_else(|e| panic!("{e}"));
    let mut opts = RunOptions::new(DEFAULT_SEED);
    opts.points = Some(50);
    let rep = cmd_verify(&pf, &opts).unwrap();
    print!("{}", rep.to_json());
    eprint!("{}", rep.table().lines().last().unwrap_or_default());
    eprintln!();
}
