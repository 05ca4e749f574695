//! Structured pot/vertebra/disc columns for closed-loop testing.
//!
//! The column is a box of constant cross-section stacked along +z, with x the
//! lateral axis and +y anterior. Each hexahedral cell is split into the six
//! Kuhn tetrahedra around its main diagonal; every cell uses the same
//! diagonal, so neighbouring cells (and neighbouring parts) conform and
//! share their interface nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Mesh, Part, PartId, PartRole};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub width_mm: f64,
    pub depth_mm: f64,
    pub pot_height_mm: f64,
    pub vertebra_height_mm: f64,
    pub disc_height_mm: f64,
    pub cells_x: usize,
    pub cells_y: usize,
    pub pot_cells_z: usize,
    pub vertebra_cells_z: usize,
    pub disc_cells_z: usize,
    /// Number of vertebral bodies; discs sit between consecutive ones.
    pub vertebrae: usize,
    /// Without pots the stack is VERTEBRA-(DISC-VERTEBRA)*.
    pub include_pots: bool,
    /// Anterior shift of the load point as a fraction of `depth_mm`.
    pub flexion_offset: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            width_mm: 20.0,
            depth_mm: 16.0,
            pot_height_mm: 4.0,
            vertebra_height_mm: 8.0,
            disc_height_mm: 4.0,
            cells_x: 10,
            cells_y: 8,
            pot_cells_z: 2,
            vertebra_cells_z: 4,
            disc_cells_z: 2,
            vertebrae: 2,
            include_pots: true,
            flexion_offset: 0.10,
        }
    }
}

impl PhantomSpec {
    /// A coarse column, cheap enough for unit tests.
    pub fn small() -> Self {
        PhantomSpec {
            width_mm: 8.0,
            depth_mm: 6.0,
            pot_height_mm: 2.0,
            vertebra_height_mm: 4.0,
            disc_height_mm: 2.0,
            cells_x: 4,
            cells_y: 3,
            pot_cells_z: 1,
            vertebra_cells_z: 2,
            disc_cells_z: 1,
            ..PhantomSpec::default()
        }
    }

    /// One vertebra-labelled box and nothing else.
    pub fn single_block(width: f64, depth: f64, height: f64, cells: [usize; 3]) -> Self {
        PhantomSpec {
            width_mm: width,
            depth_mm: depth,
            vertebra_height_mm: height,
            cells_x: cells[0],
            cells_y: cells[1],
            vertebra_cells_z: cells[2],
            vertebrae: 1,
            include_pots: false,
            ..PhantomSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("width_mm", self.width_mm),
            ("depth_mm", self.depth_mm),
            ("vertebra_height_mm", self.vertebra_height_mm),
        ];
        for (name, v) in dims {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.vertebrae > 1 && !(self.disc_height_mm > 0.0 && self.disc_height_mm.is_finite()) {
            return Err(Error::InvalidInput("disc_height_mm must be positive".into()));
        }
        if self.include_pots && !(self.pot_height_mm > 0.0 && self.pot_height_mm.is_finite()) {
            return Err(Error::InvalidInput("pot_height_mm must be positive".into()));
        }
        if self.cells_x == 0 || self.cells_y == 0 || self.vertebra_cells_z == 0 {
            return Err(Error::InvalidInput("subdivisions must be at least 1".into()));
        }
        if (self.include_pots && self.pot_cells_z == 0) || (self.vertebrae > 1 && self.disc_cells_z == 0) {
            return Err(Error::InvalidInput("subdivisions must be at least 1".into()));
        }
        if self.vertebrae == 0 {
            return Err(Error::InvalidInput("at least one vertebra is required".into()));
        }
        if !(self.flexion_offset.abs() < 0.5) {
            return Err(Error::InvalidInput(format!(
                "flexion offset {} must lie within half the depth",
                self.flexion_offset
            )));
        }
        Ok(())
    }

    /// Bottom-to-top `(name, role, height, cells)` layers.
    pub fn layers(&self) -> Vec<(String, PartRole, f64, usize)> {
        let mut out = Vec::new();
        if self.include_pots {
            out.push(("pot_inferior".to_string(), PartRole::Pot, self.pot_height_mm, self.pot_cells_z));
        }
        for v in 1..=self.vertebrae {
            if v > 1 {
                out.push((format!("disc_{}", v - 1), PartRole::Disc, self.disc_height_mm, self.disc_cells_z));
            }
            out.push((format!("vertebra_{v}"), PartRole::Vertebra, self.vertebra_height_mm, self.vertebra_cells_z));
        }
        if self.include_pots {
            out.push(("pot_superior".to_string(), PartRole::Pot, self.pot_height_mm, self.pot_cells_z));
        }
        out
    }

    pub fn total_height(&self) -> f64 {
        self.layers().iter().map(|l| l.2).sum()
    }

    /// Point on the top face where the axial load acts: centred laterally,
    /// shifted anteriorly by `flexion_offset · depth`.
    pub fn load_point(&self) -> Vec3 {
        Vec3::new(0.0, self.flexion_offset * self.depth_mm, self.total_height())
    }
}

/// Kuhn triangulation of the unit cube: one tetrahedron per axis permutation.
fn kuhn_tets() -> [[[usize; 3]; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS.map(|p| {
        let mut v = [0usize; 3];
        let mut tet = [[0usize; 3]; 4];
        for (k, &axis) in p.iter().enumerate() {
            v[axis] = 1;
            tet[k + 1] = v;
        }
        tet
    })
}

pub fn build_phantom(spec: &PhantomSpec) -> Result<Mesh> {
    spec.validate()?;
    let layers = spec.layers();
    let (nx, ny) = (spec.cells_x, spec.cells_y);

    let mut z_levels = vec![0.0];
    let mut cell_part: Vec<PartId> = Vec::new();
    let mut parts = BTreeMap::new();
    let mut z0 = 0.0;
    for (id, (name, role, height, cells)) in layers.into_iter().enumerate() {
        let id = id as PartId;
        for k in 1..=cells {
            // exact at the layer top so interfaces sit at the stated heights
            z_levels.push(if k == cells { z0 + height } else { z0 + height * k as f64 / cells as f64 });
            cell_part.push(id);
        }
        z0 += height;
        parts.insert(id, Part { name, role });
    }
    let nz = cell_part.len();

    let xs: Vec<f64> = (0..=nx)
        .map(|i| -0.5 * spec.width_mm + spec.width_mm * i as f64 / nx as f64)
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| -0.5 * spec.depth_mm + spec.depth_mm * j as f64 / ny as f64)
        .collect();

    let index = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut corners = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for &z in &z_levels {
        for &y in &ys {
            for &x in &xs {
                corners.push(Vec3::new(x, y, z));
            }
        }
    }

    let template = kuhn_tets();
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    let mut element_parts = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for t in &template {
                    let mut tet = t.map(|o| index(i + o[0], j + o[1], k + o[2]));
                    if super::signed_volume(&corners, &tet) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                    element_parts.push(cell_part[k]);
                }
            }
        }
    }
    Mesh::from_linear(corners, &tets, element_parts, parts)
}
