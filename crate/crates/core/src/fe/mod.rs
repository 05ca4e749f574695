//! Linear elastostatics on tet10 meshes.

mod assembly;
mod constraints;
mod element;
mod field;
mod fit;
mod pcg;
pub mod sparse;

pub use assembly::{assemble, ElasticitySystem};
pub use constraints::{apply_bcs, apply_dirichlet, reaction_force, BoundaryConditionSet, ConstrainedSystem};
pub use element::{element_strain, isotropic_d, natural_gradients, shape_functions, tet10_stiffness, ElementMatrix, StrainVector};
pub use field::{read_displacements, write_displacements, DisplacementField};
pub use fit::{fit_disc_modulus, FitOptions, FitResult};
pub use pcg::{pcg, solve_pcg, PcgOptions, SolveStats};
