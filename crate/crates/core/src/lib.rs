//! Heterogeneous linear-elastic tet10 models of vertebra/disc columns,
//! rigid-motion boundary conditions, surface strain derivation, and
//! agreement statistics against point-cloud displacement measurements.
//!
//! Units are mm, MPa and N throughout (MPa·mm² = N). Strains are stored
//! dimensionless and reported in microstrain at the output boundary.

pub mod error;
pub mod fe;
pub mod material;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod quadrature;
pub mod rigid;
pub mod strain;
pub mod vtk;

pub use error::{Error, Result};

/// Positions and displacements are plain 3-vectors in mm.
pub type Vec3 = nalgebra::Vector3<f64>;
