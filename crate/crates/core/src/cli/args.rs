use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::sl2::Method;

use super::pipeline::{self, CliError, RunOptions};
use super::report::VerificationReport;

#[derive(Parser, Debug)]
#[command(name = "sl2quad", version, about = "Quadratures for third-order ODEs with sl(2,R) symmetry")]
struct Cli {
    /// Sampling seed, decimal or 0x-prefixed hex [default: $SL2QUAD_SEED or 0x5128]
    #[arg(long, global = true, value_parser = pipeline::parse_seed)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the sl(2,R) brackets and the symmetry conditions
    Check { file: PathBuf },
    /// Build the solvable structures, omega forms and a complete set of integrals
    Build {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        method: u8,
        /// Write the derived objects and the report here
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run the full verification battery
    Verify {
        file: PathBuf,
        /// Sample points per identity
        #[arg(long)]
        points: Option<usize>,
        /// Tolerance for symbolic identities
        #[arg(long)]
        tol: Option<f64>,
        /// Number of integrated trajectories
        #[arg(long)]
        trajectories: Option<usize>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run check, build and verify on a bundled problem (airy, schrodinger)
    Example { name: String },
}

/// Runs the command line `args` (program name first). Exit codes: 0 when
/// every check passes, 1 on a failed check, 2 on bad input.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(rep) => i32::from(!rep.pass()),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<VerificationReport, CliError> {
    let seed = match cli.seed {
        Some(s) => s,
        None => pipeline::default_seed()?,
    };
    let mut opts = RunOptions::new(seed);
    let rep = match cli.command {
        Command::Check { file } => {
            let rep = pipeline::cmd_check(&pipeline::load(&file)?, &opts)?;
            out.write_all(rep.table().as_bytes())?;
            rep
        }
        Command::Build { file, method, dump } => {
            opts.method = Method::try_from(method)?;
            let rep = pipeline::cmd_build(&pipeline::load(&file)?, &opts, dump.as_deref())?;
            out.write_all(rep.table().as_bytes())?;
            rep
        }
        Command::Verify {
            file,
            points,
            tol,
            trajectories,
            json,
        } => {
            opts.points = points;
            opts.tol = tol;
            opts.trajectories = trajectories;
            let pf = pipeline::load(&file)?;
            let rep = pipeline::cmd_verify(&pf, &opts)?;
            match json {
                Some(path) => {
                    std::fs::write(path, rep.to_json())?;
                    out.write_all(rep.table().as_bytes())?;
                }
                None => out.write_all(rep.to_json().as_bytes())?,
            }
            rep
        }
        Command::Example { name } => {
            let rep = pipeline::cmd_example(&name, &opts)?;
            out.write_all(rep.table().as_bytes())?;
            rep
        }
    };
    Ok(rep)
}
