use std::io::Write;

fn main() {
    let out = std::io::stdout();
    let err = std::io::stderr();
    let code = sl2quad::cli::run(std::env::args_os(), &mut out.lock(), &mut err.lock());
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
