use std::collections::{BTreeMap, BTreeSet};

use super::assembly::ElasticitySystem;
use super::field::DisplacementField;
use super::sparse::CsrMatrix;
use crate::mesh::Mesh;
use crate::rigid::RigidMotion;
use crate::{Error, Result, Vec3};

/// Fixed nodes plus a node set moved rigidly by `motion`.
///
/// The motion is imposed in small-rotation form about `pivot` (the driven
/// nodes' centroid when unset), so a pure rotation of the driven set
/// carries no strain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditionSet {
    pub fixed: BTreeSet<usize>,
    pub driven: BTreeSet<usize>,
    pub motion: RigidMotion,
    pub pivot: Option<Vec3>,
}

impl BoundaryConditionSet {
    pub fn new(fixed: BTreeSet<usize>, driven: BTreeSet<usize>, motion: RigidMotion) -> Result<Self> {
        let bcs = BoundaryConditionSet {
            fixed,
            driven,
            motion,
            pivot: None,
        };
        bcs.validate()?;
        Ok(bcs)
    }

    pub fn with_pivot(mut self, pivot: Vec3) -> Self {
        self.pivot = Some(pivot);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.fixed.is_empty() || self.driven.is_empty() {
            return Err(Error::InvalidInput("fixed and driven node sets must be non-empty".into()));
        }
        if let Some(n) = self.fixed.intersection(&self.driven).next() {
            return Err(Error::InvalidInput(format!("node {n} is both fixed and driven")));
        }
        self.motion.validate()
    }

    /// Prescribed displacement of every constrained node.
    pub fn prescribed(&self, mesh: &Mesh) -> Result<BTreeMap<usize, Vec3>> {
        self.validate()?;
        let count = mesh.num_nodes();
        let mut out = BTreeMap::new();
        for &n in &self.fixed {
            if n >= count {
                return Err(Error::NodeOutOfRange { index: n, count });
            }
            out.insert(n, Vec3::zeros());
        }
        if let Some(&n) = self.driven.iter().find(|&&n| n >= count) {
            return Err(Error::NodeOutOfRange { index: n, count });
        }
        let pivot = self.pivot.unwrap_or_else(|| {
            self.driven.iter().map(|&n| mesh.nodes()[n]).sum::<Vec3>() / self.driven.len() as f64
        });
        for &n in &self.driven {
            out.insert(n, self.motion.linearized_displacement(&mesh.nodes()[n], &pivot));
        }
        Ok(out)
    }
}

/// The system restricted to free DOFs, with prescribed values moved to the
/// right-hand side.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub reduced: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full-length DOF vector holding prescribed values (zero on free DOFs).
    pub prescribed: Vec<f64>,
    /// Free DOF index of every global DOF.
    pub free_index: Vec<Option<usize>>,
    pub free_dofs: Vec<usize>,
}

impl ConstrainedSystem {
    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Scatters a free-DOF solution into a full displacement field.
    pub fn expand(&self, free: &[f64]) -> DisplacementField {
        let mut full = self.prescribed.clone();
        for (k, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[k];
        }
        DisplacementField::from_dofs(&full)
    }
}

/// Eliminates nodes with known displacement.
pub fn apply_dirichlet(system: &ElasticitySystem, prescribed: &BTreeMap<usize, Vec3>) -> Result<ConstrainedSystem> {
    let ndof = system.num_dofs();
    let count = ndof / 3;
    let mut values = vec![0.0; ndof];
    let mut is_fixed = vec![false; ndof];
    for (&n, u) in prescribed {
        if n >= count {
            return Err(Error::NodeOutOfRange { index: n, count });
        }
        if !(u.x.is_finite() && u.y.is_finite() && u.z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite prescribed displacement at node {n}")));
        }
        for a in 0..3 {
            values[3 * n + a] = u[a];
            is_fixed[3 * n + a] = true;
        }
    }
    let free_dofs: Vec<usize> = (0..ndof).filter(|&d| !is_fixed[d]).collect();
    let mut free_index = vec![None; ndof];
    for (k, &d) in free_dofs.iter().enumerate() {
        free_index[d] = Some(k);
    }
    let kup = system.stiffness.mul_vec(&values);
    let rhs = free_dofs.iter().map(|&d| system.load[d] - kup[d]).collect();
    Ok(ConstrainedSystem {
        reduced: system.stiffness.restrict(&free_index, &free_dofs),
        rhs,
        prescribed: values,
        free_index,
        free_dofs,
    })
}

pub fn apply_bcs(system: &ElasticitySystem, bcs: &BoundaryConditionSet, mesh: &Mesh) -> Result<ConstrainedSystem> {
    if system.num_dofs() != 3 * mesh.num_nodes() {
        return Err(Error::InvalidInput("system and mesh sizes differ".into()));
    }
    apply_dirichlet(system, &bcs.prescribed(mesh)?)
}

/// Sum of nodal forces `K u` over `nodes` (N when K is in MPa·mm).
pub fn reaction_force(stiffness: &CsrMatrix, u: &DisplacementField, nodes: &BTreeSet<usize>) -> Vec3 {
    let dofs = u.to_dofs();
    let mut r = Vec3::zeros();
    for &n in nodes {
        for a in 0..3 {
            r[a] += stiffness.row_dot(3 * n + a, &dofs);
        }
    }
    r
}
