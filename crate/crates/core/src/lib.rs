//! Stabilized P1 finite elements for transient power-law flow coupled with
//! variable-coefficient advection-diffusion-reaction transport.
//!
//! The crate is layered bottom-up: [`mesh`] and [`fem`] provide geometry and
//! quadrature, [`model`] the physics and manufactured solution, [`stab`] the
//! subscale parameters, [`solver`] the coupled time stepper and [`harness`]
//! the error norms, convergence tables and file formats.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub mod model;
pub mod par;
pub mod solver;
pub mod stab;

pub use error::{Error, Result, Term};
pub use mesh::Mesh;
pub use model::PhysicalParams;
pub use par::Exec;
pub use solver::{FieldState, Method, Solver, SolverConfig};
