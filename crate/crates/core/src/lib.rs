//! Localized orthogonal decomposition for two-valued high-contrast diffusion
//! problems on the unit square.
//!
//! The crate is organised bottom-up: [`mesh`] builds the nested structured
//! triangulations, [`coefficient`] generates the coefficient families,
//! [`assembly`] provides P1 matrices and the linear solvers, [`interp`] builds
//! the quasi-interpolation operators and [`lod`] runs the multiscale method.

pub mod assembly;
pub mod coefficient;
pub mod error;
pub mod interp;
pub mod lod;
pub mod mesh;
pub mod rng;
pub mod sparse;

pub use assembly::{energy_norm, solve_saddle, solve_spd, SaddleSolver, Source, SpdFactor};
pub use coefficient::{Coefficient, CoefficientKind, ComponentLabeling};
pub use error::{Error, Result};
pub use interp::{InterpOperator, NodeClass, NodeVariable, OperatorKind, OperatorParams};
pub use lod::{CorrectorSet, LodContext, LodSolution};
pub use mesh::{BoundarySpec, Edge, ElementSet, Grid, MeshHierarchy, MeshLevel, ScaleFactor};
pub use rng::{SplitMix64, UniformSource};
pub use sparse::SparseMatrix;
