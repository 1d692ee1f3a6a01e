//! First-order virtual element method (VEM) for plane-strain elasticity on
//! general polygonal meshes, with equilibrium-based stress recovery by
//! compatibility in patches (RCP).
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: polygonal meshes of the unit square, generators for the eight
//!   benchmark families, geometry queries, element patches and a text format.
//! - [`material`]: isotropic plane-strain constitutive matrices.
//! - [`vem`]: element operators, global assembly, Dirichlet elimination and
//!   the sparse direct solve.
//! - [`rcp`]: patch-wise complementary energy minimisation over
//!   self-equilibrated linear stress modes.
//! - [`verification`]: manufactured solutions, polygon quadrature, the energy
//!   error norm and convergence studies.
//! - [`report`]: CSV, gnuplot and legacy VTK writers.

pub mod error;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod quadrature;
pub mod rcp;
pub mod report;
pub mod vem;
pub mod verification;

pub use error::{Error, Result};
pub use material::{ElasticMatrix, LameMaterial};
pub use mesh::{ElementPatch, MeshFamily, PatchKind, Point2, PolygonalMesh};
pub use rcp::{RecoveredStressField, RecoveryKind};
pub use vem::{DisplacementField, ElementOperators};
pub use verification::{ConvergenceRecord, ManufacturedCase, StressMethod, TestId};

/// Stress in Voigt order `(sigma_x, sigma_y, tau_xy)`.
pub type Stress = nalgebra::Vector3<f64>;
