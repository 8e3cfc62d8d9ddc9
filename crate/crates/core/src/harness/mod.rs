//! Error norms, convergence studies and file formats.

pub mod config;
pub mod convergence;
pub mod norms;
pub mod table;
pub mod vtk;
