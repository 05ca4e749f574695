//! In-plane strains of linear surface triangles.
//!
//! Each triangle gets a local orthonormal basis: `e1` along the edge from
//! corner 0 to corner 1 and `e2` in-plane, perpendicular to it. Stored
//! tensor components are relative to that basis; principal values are not.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{Region, RoIPartition, SurfaceMesh};
use crate::{Error, Result, Vec3};

/// Triangles with a smaller area (mm²) are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Local in-plane basis `(e1, e2)` of a triangle.
pub fn triangle_basis(coords: &[Vec3; 3]) -> Result<(Vec3, Vec3)> {
    let a = coords[1] - coords[0];
    let b = coords[2] - coords[0];
    let n = a.cross(&b);
    if !(0.5 * n.norm() > MIN_TRIANGLE_AREA) {
        return Err(Error::Degenerate(format!("triangle area {:e} mm²", 0.5 * n.norm())));
    }
    let e1 = a.normalize();
    let e2 = n.normalize().cross(&e1);
    Ok((e1, e2))
}

/// Constant small-strain tensor of a linear triangle, in its local basis.
pub fn triangle_strain(coords: &[Vec3; 3], disp: &[Vec3; 3]) -> Result<Matrix2<f64>> {
    let (e1, e2) = triangle_basis(coords)?;
    let xy: Vec<(f64, f64)> = coords
        .iter()
        .map(|p| {
            let d = p - coords[0];
            (d.dot(&e1), d.dot(&e2))
        })
        .collect();
    let (x, y) = ([xy[0].0, xy[1].0, xy[2].0], [xy[0].1, xy[1].1, xy[2].1]);
    let two_a = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
    // gradients of N1, N2; N0 drops out by using displacements relative to corner 0
    let grad_n = [
        ((y[2] - y[0]) / two_a, (x[0] - x[2]) / two_a),
        ((y[0] - y[1]) / two_a, (x[1] - x[0]) / two_a),
    ];
    let mut g = Matrix2::zeros();
    for (u, (gx, gy)) in disp[1..].iter().zip(grad_n) {
        let du = u - disp[0];
        let (u1, u2) = (du.dot(&e1), du.dot(&e2));
        g[(0, 0)] += u1 * gx;
        g[(0, 1)] += u1 * gy;
        g[(1, 0)] += u2 * gx;
        g[(1, 1)] += u2 * gy;
    }
    Ok((g + g.transpose()) * 0.5)
}

/// `(ε_max, ε_min)` of a symmetric 2×2 tensor.
pub fn principal_strains(t: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (t[(0, 0)] + t[(1, 1)]);
    let half_diff = 0.5 * (t[(0, 0)] - t[(1, 1)]);
    let shear = 0.5 * (t[(0, 1)] + t[(1, 0)]);
    let radius = half_diff.hypot(shear);
    (mean + radius, mean - radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleStrain {
    /// Basis-relative tensor `[[ε11, ε12], [ε12, ε22]]`.
    pub tensor: [[f64; 2]; 2],
    pub eps_max: f64,
    pub eps_min: f64,
    pub centroid: Vec3,
    pub roi: Region,
}

/// Per-triangle strains; `None` where a corner displacement was missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceStrainField {
    pub triangles: Vec<Option<TriangleStrain>>,
    pub missing: usize,
}

impl SurfaceStrainField {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn valid(&self) -> impl Iterator<Item = (usize, &TriangleStrain)> {
        self.triangles.iter().enumerate().filter_map(|(i, t)| t.as_ref().map(|t| (i, t)))
    }
}

/// Strains of every surface triangle from nodal displacements.
///
/// `disp(node)` returns `None` for nodes without data; triangles touching
/// such a node (or degenerate ones) are excluded and counted as missing.
pub fn surface_strain_field(
    surface: &SurfaceMesh,
    disp: impl Fn(usize) -> Option<Vec3> + Sync,
    rois: &RoIPartition,
) -> Result<SurfaceStrainField> {
    if rois.assignment.len() != surface.len() {
        return Err(Error::InvalidInput(format!(
            "RoI partition has {} entries for {} triangles",
            rois.assignment.len(),
            surface.len()
        )));
    }
    let triangles: Vec<Option<TriangleStrain>> = (0..surface.len())
        .into_par_iter()
        .map(|t| {
            let nodes = surface.triangles()[t].nodes;
            let d = [disp(nodes[0])?, disp(nodes[1])?, disp(nodes[2])?];
            let coords = surface.corners(t);
            let tensor = triangle_strain(&coords, &d).ok()?;
            let (eps_max, eps_min) = principal_strains(&tensor);
            Some(TriangleStrain {
                tensor: [[tensor[(0, 0)], tensor[(0, 1)]], [tensor[(1, 0)], tensor[(1, 1)]]],
                eps_max,
                eps_min,
                centroid: surface.centroid(t),
                roi: rois.region(t),
            })
        })
        .collect();
    let missing = triangles.iter().filter(|t| t.is_none()).count();
    Ok(SurfaceStrainField { triangles, missing })
}

/// Writes `tri_id,cx,cy,cz,roi,eps_max_ue,eps_min_ue`; missing triangles are skipped.
pub fn write_strain_csv(field: &SurfaceStrainField, path: &Path) -> Result<()> {
    let mut out = String::from("tri_id,cx,cy,cz,roi,eps_max_ue,eps_min_ue\n");
    for (i, t) in field.valid() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            t.centroid.x,
            t.centroid.y,
            t.centroid.z,
            t.roi.as_str(),
            t.eps_max * 1e6,
            t.eps_min * 1e6
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
