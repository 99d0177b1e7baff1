//! One-dimensional atomistic chain with next-nearest-neighbour many-body
//! interactions, its geometry-reconstruction a/c coupling, a posteriori error
//! estimators, efficiency audits and the adaptive refinement loop.

pub mod adaptivity;
pub mod atomistic;
pub mod banded;
pub mod chain;
pub mod coupling;
pub mod efficiency;
pub mod energy;
pub mod error;
pub mod estimators;
pub mod force;
pub mod mesh;
pub mod newton;
pub mod potential;

pub use chain::{BondStencil, Deformation, LatticeConfig, LatticeFunction, Norm};
pub use coupling::{CoupledProblem, CoupledState};
pub use error::{Error, Result};
pub use estimators::{EstimatorReport, StabilityChoice};
pub use mesh::{ACMesh, Violation};
pub use potential::{DerivativeRatios, PotentialModel};
