//! hp-Nédélec (H(curl)) finite elements on quadrilateral and hexahedral
//! meshes with hanging nodes and arbitrary vertex numbering.
//!
//! The pipeline is
//! [`mesh`] → [`orientation`] → [`nedelec_basis`] → [`constraints`] →
//! [`maxwell_assembly`] → [`solver_goals`].

pub mod cli;
pub mod constraints;
pub mod continuity;
pub mod discretization;
pub mod dofs;
pub mod error;
pub mod geometry;
pub mod maxwell_assembly;
pub mod mesh;
pub mod nedelec_basis;
pub mod orientation;
pub mod poly1d;
pub mod scenario;
pub mod solver_goals;
pub mod sparse;
pub mod vtk;

pub use error::{Error, Result};
