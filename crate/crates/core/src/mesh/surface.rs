//! Boundary surfaces of part selections and their left/central/right bands.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{Mesh, PartId};
use crate::{Error, Result, Vec3};

/// Faces of a tetrahedron, listed so that each is counter-clockwise seen
/// from outside a positively oriented element.
const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTriangle {
    /// Global corner node indices, wound counter-clockwise about `normal`.
    pub nodes: [usize; 3],
    pub element: usize,
    pub part: PartId,
    pub normal: Vec3,
}

/// Linear triangles on the boundary of a part selection.
///
/// Keeps its own copy of the vertex positions, so it stays valid
/// independently of the mesh it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    triangles: Vec<SurfaceTriangle>,
    /// Sorted global ids of every triangle corner.
    vertices: Vec<usize>,
    positions: Vec<Vec3>,
    part_names: BTreeMap<PartId, String>,
}

impl SurfaceMesh {
    pub fn triangles(&self) -> &[SurfaceTriangle] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Global node ids of the surface vertices, ascending.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Positions parallel to [`SurfaceMesh::vertices`].
    pub fn vertex_positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, node: usize) -> Option<Vec3> {
        self.vertices
            .binary_search(&node)
            .ok()
            .map(|i| self.positions[i])
    }

    pub fn part_names(&self) -> &BTreeMap<PartId, String> {
        &self.part_names
    }

    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        let t = &self.triangles[tri];
        t.nodes.map(|n| self.position(n).expect("triangle vertex is indexed"))
    }

    pub fn centroid(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.corners(tri);
        (a + b + c) / 3.0
    }

    pub fn area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.len()).map(|t| self.area(t)).sum()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        super::bounds_of(self.positions.iter())
    }

    /// Restricts the surface to triangles of one part.
    pub fn filter_part(&self, part: PartId) -> SurfaceMesh {
        let tris = self.triangles.iter().filter(|t| t.part == part).cloned().collect();
        let names = self
            .part_names
            .iter()
            .filter(|(&id, _)| id == part)
            .map(|(&id, n)| (id, n.clone()))
            .collect();
        SurfaceMesh::from_triangles(tris, |n| self.position(n).unwrap(), names)
    }

    fn from_triangles(
        triangles: Vec<SurfaceTriangle>,
        pos: impl Fn(usize) -> Vec3,
        part_names: BTreeMap<PartId, String>,
    ) -> Self {
        let vertices: Vec<usize> = triangles
            .iter()
            .flat_map(|t| t.nodes)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let positions = vertices.iter().map(|&n| pos(n)).collect();
        SurfaceMesh {
            triangles,
            vertices,
            positions,
            part_names,
        }
    }
}

fn validate_parts(mesh: &Mesh, parts: &BTreeSet<PartId>) -> Result<()> {
    if parts.is_empty() {
        return Err(Error::InvalidInput("part selection is empty".into()));
    }
    for &p in parts {
        mesh.part(p)?;
    }
    Ok(())
}

/// Counts how many elements (restricted by `counted`) own each face.
fn face_census(mesh: &Mesh, counted: impl Fn(usize) -> bool) -> HashMap<[usize; 3], u32> {
    let mut census: HashMap<[usize; 3], u32> = HashMap::new();
    for (e, conn) in mesh.elements().iter().enumerate() {
        if !counted(e) {
            continue;
        }
        for f in TET_FACES {
            let mut key = f.map(|i| conn[i]);
            key.sort_unstable();
            *census.entry(key).or_default() += 1;
        }
    }
    census
}

fn collect_faces(mesh: &Mesh, parts: &BTreeSet<PartId>, census: &HashMap<[usize; 3], u32>) -> SurfaceMesh {
    let nodes = mesh.nodes();
    let mut triangles = Vec::new();
    for (e, conn) in mesh.elements().iter().enumerate() {
        let part = mesh.element_part(e);
        if !parts.contains(&part) {
            continue;
        }
        let centroid = (0..4).map(|i| nodes[conn[i]]).sum::<Vec3>() / 4.0;
        for f in TET_FACES {
            let mut tri = f.map(|i| conn[i]);
            let mut key = tri;
            key.sort_unstable();
            if census.get(&key) != Some(&1) {
                continue;
            }
            let [a, b, c] = tri.map(|n| nodes[n]);
            let mut normal = (b - a).cross(&(c - a)).normalize();
            if normal.dot(&((a + b + c) / 3.0 - centroid)) < 0.0 {
                tri.swap(1, 2);
                normal = -normal;
            }
            triangles.push(SurfaceTriangle {
                nodes: tri,
                element: e,
                part,
                normal,
            });
        }
    }
    let names = parts
        .iter()
        .map(|&p| (p, mesh.parts()[&p].name.clone()))
        .collect();
    SurfaceMesh::from_triangles(triangles, |n| nodes[n], names)
}

/// Boundary of the selected parts: faces owned by exactly one selected
/// element. Interfaces with unselected parts are included.
pub fn extract_surface(mesh: &Mesh, parts: &BTreeSet<PartId>) -> Result<SurfaceMesh> {
    validate_parts(mesh, parts)?;
    let census = face_census(mesh, |e| parts.contains(&mesh.element_part(e)));
    Ok(collect_faces(mesh, parts, &census))
}

/// Faces of the selected parts that lie on the outer boundary of the
/// whole mesh, i.e. the externally visible surface of those parts.
pub fn extract_exterior_surface(mesh: &Mesh, parts: &BTreeSet<PartId>) -> Result<SurfaceMesh> {
    validate_parts(mesh, parts)?;
    let census = face_census(mesh, |_| true);
    Ok(collect_faces(mesh, parts, &census))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Left,
    Central,
    Right,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Left, Region::Central, Region::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Left => "LEFT",
            Region::Central => "CENTRAL",
            Region::Right => "RIGHT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoIPartition {
    pub assignment: Vec<Region>,
    pub axis: Vec3,
    pub fractions: (f64, f64),
}

impl RoIPartition {
    pub fn region(&self, tri: usize) -> Region {
        self.assignment[tri]
    }

    pub fn count(&self, region: Region) -> usize {
        self.assignment.iter().filter(|&&r| r == region).count()
    }
}

/// Splits each part's triangles into three bands by the projection of
/// their centroids on `axis`, normalised to the part's vertex extent.
pub fn partition_rois(surface: &SurfaceMesh, axis: Vec3, fractions: (f64, f64)) -> Result<RoIPartition> {
    let (f1, f2) = fractions;
    if !(0.0 < f1 && f1 < f2 && f2 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "RoI fractions must satisfy 0 < f1 < f2 < 1, got ({f1}, {f2})"
        )));
    }
    let len = axis.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidInput("RoI axis must be a non-zero vector".into()));
    }
    let axis = axis / len;

    let mut extent: BTreeMap<PartId, (f64, f64)> = BTreeMap::new();
    for t in surface.triangles() {
        let e = extent.entry(t.part).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        for n in t.nodes {
            let s = surface.position(n).unwrap().dot(&axis);
            e.0 = e.0.min(s);
            e.1 = e.1.max(s);
        }
    }
    for (part, &(lo, hi)) in &extent {
        if !(hi > lo) {
            return Err(Error::Degenerate(format!(
                "part {part} has zero extent along the RoI axis"
            )));
        }
    }

    let assignment = (0..surface.len())
        .map(|t| {
            let (lo, hi) = extent[&surface.triangles()[t].part];
            let s = (surface.centroid(t).dot(&axis) - lo) / (hi - lo);
            if s < f1 {
                Region::Left
            } else if s < f2 {
                Region::Central
            } else {
                Region::Right
            }
        })
        .collect();
    Ok(RoIPartition {
        assignment,
        axis,
        fractions,
    })
}
