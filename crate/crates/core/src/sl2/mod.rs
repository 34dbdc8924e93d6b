//! The integration pipeline for third-order equations with an sl(2,R)
//! symmetry algebra: bracket relations, reduction by `v3`, the inherited
//! C-infinity symmetries and their canonical representatives, the systems
//! for `hbar`, F-functions, solvable structures, omega forms and complete
//! sets of first integrals.

mod integrals;
mod lift;
mod problem;
mod reduce;
mod structures;

pub use integrals::{complete_integral_set, IntegralEvaluator, IntegralSet, Method, MethodInputs};
pub use lift::{beta_forms, check_first_integrals, f_from_h, f_from_integrals, h_from_integrals, verify_hs, verify_tres, Betas};
pub use problem::{check_sl2_relations, CheckRecord, RelationsReport, Sl2Problem, Tolerances};
pub use reduce::{
    canonical_rep, find_varsigma, inherited_csym, reduce_with_v3, rho_coeff, Inherited, ReducedProblem, Reduction,
    ReductionInput,
};
pub use structures::{
    build_structures, closure_ladder, ideal_membership, omega_forms, verify_primitive, PrimitiveReport, Structures,
};

use crate::expr::{EvalError, SampleError};
use crate::jet::JetError;
use crate::numint::NumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Sl2Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` is not invariant under v3")]
    NotInvariant(String),
    #[error("projection of {0} onto the reduced space is not well defined")]
    NotProjectable(String),
    #[error("no monomial x^a u^b with v3(f) = f and |a|, |b| <= 3; supply varsigma1")]
    NoVarsigma,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing prerequisite: {0}")]
    Missing(String),
    #[error("functionally dependent set {members:?} (worst singular value ratio {ratio:e})")]
    Dependent { members: Vec<String>, ratio: f64 },
}

#[cfg(test)]
mod tests;
