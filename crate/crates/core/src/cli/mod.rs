//! Command-line front end: problem files, reports and the four commands.

mod args;
pub mod pipeline;
pub mod problem;
pub mod report;

pub use args::run;
pub use pipeline::{
    bundled, cmd_build, cmd_check, cmd_example, cmd_verify, halving_report, integrate, load, parse_seed, CliError,
    HalvingReport, RunOptions, DEFAULT_SEED, EXAMPLES,
};
pub use problem::{ProblemError, ProblemFile, RiccatiSpec, SolutionSpec, TrajectorySpec};
pub use report::{Artifact, Environment, Summary, VerificationReport};
