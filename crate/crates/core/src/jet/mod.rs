//! Vector fields and differential forms on finite-order jet spaces.

mod coords;
mod field;
mod form;
mod structure;

pub use coords::{CoordSystem, Role};
pub use field::{
    associated_field, characteristic, is_point_symmetry, lambda_prolong, lie_bracket, prolong, VectorField,
};
pub use form::{combinations, DifferentialForm};
pub use structure::{
    check_solvable_structure, lstsq_residual, OrderedStructure, ScaledField, StructureFailure, StructureReport,
};

use crate::expr::SampleError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("invalid coordinates: {0}")]
    Coordinates(String),
    #[error("`{0}` is not a coordinate of this jet space")]
    ForeignVariable(String),
    #[error("top-order coordinate `{0}` needs a closure expression")]
    NoClosure(String),
    #[error("coefficient `{0}` is not a point-field coefficient on (x, u)")]
    NotPointField(String),
    #[error("objects live on different coordinate systems or degrees")]
    Mismatch,
    #[error("form degree {0} exceeds the dimension")]
    DegreeOverflow(usize),
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error(transparent)]
    Sample(#[from] SampleError),
}
