//! Integration by quadratures of third-order ODEs whose point symmetry
//! algebra is sl(2,R), through solvable structures built from the
//! symmetry generators.
//!
//! The crate is organized bottom-up:
//!
//! * [`expr`] symbolic expressions, parsing, differentiation, evaluation.
//! * [`jet`] vector fields and differential forms on jet spaces.
//! * [`numint`] Runge-Kutta integration, special-function pairs, quadrature.
//! * [`sl2`] the reduction, C-infinity symmetries, F-functions, structures
//!   and first integrals.
//! * [`cli`] problem files, reports and command drivers.

pub mod expr;
pub mod jet;
pub mod numint;
pub mod sl2;
pub mod cli;
