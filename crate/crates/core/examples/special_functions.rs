//! The fundamental pairs of the bundled examples and their Wronskians.

use sl2quad::cli::bundled;

fn main() {
    for name in ["airy", "schrodinger"] {
        let pf = bundled(name).unwrap();
        for pair in &pf.pairs {
            let s = pair.spec();
            println!("{name}: {} {} on {:?}, anchor {}", s.names[0], s.names[1], s.interval, s.anchor);
            let (lo, hi) = s.interval;
            for k in 0..=4 {
                let t = lo + (hi - lo) * k as f64 / 4.0;
                let [f, df, g, dg] = pair.state(t).unwrap();
                println!("  t = {t:6.3}  f = {f:12.6}  f' = {df:12.6}  g = {g:12.6}  g' = {dg:12.6}  W = {:.12}", pair.wronskian(t).unwrap());
            }
        }
    }
}
