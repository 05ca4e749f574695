//! Ten-node tetrahedral meshes with labelled parts.
//!
//! Node numbering inside an element follows the usual convention: corner
//! nodes 0-3, then midside nodes 4-9 on edges 01, 12, 20, 03, 13, 23.
//! Geometry is straight-edged: every midside node sits on its edge midpoint.

mod io;
mod phantom;
mod surface;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub use io::{read_mesh, write_mesh};
pub use phantom::{build_phantom, PhantomSpec};
pub use surface::{
    extract_exterior_surface, extract_surface, partition_rois, Region, RoIPartition, SurfaceMesh,
    SurfaceTriangle,
};

/// Corner pairs spanned by midside nodes 4..=9.
pub const TET10_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)];

/// Maximum distance between a midside node and its edge midpoint.
pub const MIDSIDE_TOL: f64 = 1e-9;

pub type PartId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PartRole {
    Vertebra,
    Disc,
    Pot,
}

impl PartRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PartRole::Vertebra => "VERTEBRA",
            PartRole::Disc => "DISC",
            PartRole::Pot => "POT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VERTEBRA" => Some(PartRole::Vertebra),
            "DISC" => Some(PartRole::Disc),
            "POT" => Some(PartRole::Pot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub role: PartRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Vec3>,
    elements: Vec<[usize; 10]>,
    element_parts: Vec<PartId>,
    parts: BTreeMap<PartId, Part>,
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(
        nodes: Vec<Vec3>,
        elements: Vec<[usize; 10]>,
        element_parts: Vec<PartId>,
        parts: BTreeMap<PartId, Part>,
    ) -> Result<Self> {
        if element_parts.len() != elements.len() {
            return Err(Error::InvalidInput(format!(
                "{} elements but {} part labels",
                elements.len(),
                element_parts.len()
            )));
        }
        if let Some(p) = nodes.iter().position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(Error::InvalidInput(format!("node {p} has non-finite coordinates")));
        }
        for (e, conn) in elements.iter().enumerate() {
            let distinct: BTreeSet<_> = conn.iter().collect();
            if distinct.len() != 10 {
                return Err(Error::BadElement {
                    element: e,
                    reason: "repeated node index".into(),
                });
            }
            if let Some(&n) = conn.iter().find(|&&n| n >= nodes.len()) {
                return Err(Error::NodeOutOfRange {
                    index: n,
                    count: nodes.len(),
                });
            }
            if !parts.contains_key(&element_parts[e]) {
                return Err(Error::UnknownPart(element_parts[e]));
            }
            let vol = signed_volume(&nodes, conn);
            if !(vol > 0.0) {
                return Err(Error::BadElement {
                    element: e,
                    reason: format!("non-positive corner volume {vol:e}"),
                });
            }
            for (m, &(a, b)) in TET10_EDGES.iter().enumerate() {
                let mid = 0.5 * (nodes[conn[a]] + nodes[conn[b]]);
                let off = (nodes[conn[4 + m]] - mid).norm();
                if off > MIDSIDE_TOL {
                    return Err(Error::BadElement {
                        element: e,
                        reason: format!("midside node {} is {off:e} mm off its edge midpoint", 4 + m),
                    });
                }
            }
        }
        Ok(Mesh {
            nodes,
            elements,
            element_parts,
            parts,
        })
    }

    /// Promotes a linear tet mesh to tet10 by inserting one node per edge.
    ///
    /// New nodes are appended after the corner nodes, numbered in order of
    /// first appearance when walking elements and their edges in order.
    pub fn from_linear(
        corners: Vec<Vec3>,
        tets: &[[usize; 4]],
        element_parts: Vec<PartId>,
        parts: BTreeMap<PartId, Part>,
    ) -> Result<Self> {
        let mut nodes = corners;
        let n_corner = nodes.len();
        let mut edge_nodes: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elements = Vec::with_capacity(tets.len());
        for t in tets {
            if let Some(&n) = t.iter().find(|&&n| n >= n_corner) {
                return Err(Error::NodeOutOfRange {
                    index: n,
                    count: n_corner,
                });
            }
            let mut conn = [0usize; 10];
            conn[..4].copy_from_slice(t);
            for (m, &(a, b)) in TET10_EDGES.iter().enumerate() {
                let key = (t[a].min(t[b]), t[a].max(t[b]));
                let id = *edge_nodes.entry(key).or_insert_with(|| {
                    nodes.push(0.5 * (nodes[key.0] + nodes[key.1]));
                    nodes.len() - 1
                });
                conn[4 + m] = id;
            }
            elements.push(conn);
        }
        Mesh::new(nodes, elements, element_parts, parts)
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 10]] {
        &self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_part(&self, element: usize) -> PartId {
        self.element_parts[element]
    }

    pub fn element_parts(&self) -> &[PartId] {
        &self.element_parts
    }

    pub fn parts(&self) -> &BTreeMap<PartId, Part> {
        &self.parts
    }

    pub fn part(&self, id: PartId) -> Result<&Part> {
        self.parts.get(&id).ok_or(Error::UnknownPart(id))
    }

    pub fn part_by_name(&self, name: &str) -> Option<PartId> {
        self.parts
            .iter()
            .find(|(_, p)| p.name == name)
            .map(|(&id, _)| id)
    }

    pub fn parts_with_role(&self, role: PartRole) -> Vec<PartId> {
        self.parts
            .iter()
            .filter(|(_, p)| p.role == role)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn element_role(&self, element: usize) -> PartRole {
        self.parts[&self.element_parts[element]].role
    }

    pub fn element_coords(&self, element: usize) -> [Vec3; 10] {
        let conn = &self.elements[element];
        std::array::from_fn(|i| self.nodes[conn[i]])
    }

    pub fn elements_in_part(&self, part: PartId) -> impl Iterator<Item = usize> + '_ {
        self.element_parts
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p == part)
            .map(|(e, _)| e)
    }

    /// Signed volume of the corner tetrahedron of `element`.
    pub fn element_volume(&self, element: usize) -> f64 {
        signed_volume(&self.nodes, &self.elements[element])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_volume(e)).sum()
    }

    /// Axis-aligned bounding box of all nodes.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(self.nodes.iter())
    }

    /// Sorted node indices touched by elements of the given parts.
    pub fn nodes_of_parts(&self, parts: &BTreeSet<PartId>) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for (e, conn) in self.elements.iter().enumerate() {
            if parts.contains(&self.element_parts[e]) {
                set.extend(conn.iter().copied());
            }
        }
        set.into_iter().collect()
    }
}

pub(crate) fn signed_volume(nodes: &[Vec3], conn: &[usize]) -> f64 {
    let p0 = nodes[conn[0]];
    let a = nodes[conn[1]] - p0;
    let b = nodes[conn[2]] - p0;
    let c = nodes[conn[3]] - p0;
    a.dot(&b.cross(&c)) / 6.0
}

pub(crate) fn bounds_of<'a>(points: impl Iterator<Item = &'a Vec3>) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Elements whose longest corner-to-corner edge exceeds a limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeLengthReport {
    pub max_edge_mm: f64,
    /// `(element, longest edge)` for every offending element, in element order.
    pub violations: Vec<(usize, f64)>,
}

impl EdgeLengthReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_edge_lengths(mesh: &Mesh, max_edge: f64) -> Result<EdgeLengthReport> {
    if !(max_edge > 0.0) {
        return Err(Error::InvalidInput(format!("max edge length must be positive, got {max_edge}")));
    }
    let mut violations = Vec::new();
    for (e, conn) in mesh.elements().iter().enumerate() {
        let longest = TET10_EDGES
            .iter()
            .map(|&(a, b)| (mesh.nodes[conn[a]] - mesh.nodes[conn[b]]).norm())
            .fold(0.0, f64::max);
        if longest > max_edge {
            violations.push((e, longest));
        }
    }
    Ok(EdgeLengthReport {
        max_edge_mm: max_edge,
        violations,
    })
}


#[cfg(test)]
mod tests {
    use super::test_meshes::*;
    use super::*;

    #[test]
    fn promotion_places_midside_nodes_on_edges() {
        let m = unit_tet();
        assert_eq!(m.num_nodes(), 10);
        let conn = m.elements()[0];
        for (k, &(a, b)) in TET10_EDGES.iter().enumerate() {
            let mid = 0.5 * (m.nodes()[conn[a]] + m.nodes()[conn[b]]);
            assert_eq!(m.nodes()[conn[4 + k]], mid);
        }
        assert!((m.total_volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn shared_edges_get_one_midside_node() {
        // 5 corners + 9 distinct edges
        assert_eq!(tet_pair().num_nodes(), 14);
    }

    #[test]
    fn inverted_element_rejected() {
        let corners = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let err = Mesh::from_linear(corners, &[[0, 1, 2, 3]], vec![0], parts_single(PartRole::Disc)).unwrap_err();
        assert!(matches!(err, Error::BadElement { element: 0, .. }));
    }

    #[test]
    fn unknown_part_rejected() {
        let m = unit_tet();
        let err = Mesh::new(m.nodes().to_vec(), m.elements().to_vec(), vec![7], m.parts().clone()).unwrap_err();
        assert!(matches!(err, Error::UnknownPart(7)));
    }

    #[test]
    fn curved_midside_rejected() {
        let m = unit_tet();
        let mut nodes = m.nodes().to_vec();
        nodes[m.elements()[0][4]].z += 1e-6;
        let err = Mesh::new(nodes, m.elements().to_vec(), vec![0], m.parts().clone()).unwrap_err();
        assert!(matches!(err, Error::BadElement { .. }));
    }

    #[test]
    fn repeated_node_rejected() {
        let m = unit_tet();
        let mut el = m.elements()[0];
        el[9] = el[8];
        let err = Mesh::new(m.nodes().to_vec(), vec![el], vec![0], m.parts().clone()).unwrap_err();
        assert!(matches!(err, Error::BadElement { .. }));
    }

    #[test]
    fn edge_length_check_on_regular_tet() {
        let m = regular_tet();
        assert!(check_edge_lengths(&m, 2.0).unwrap().is_empty());
        let r = check_edge_lengths(&m, 0.5).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert!((r.violations[0].1 - 1.0).abs() < 1e-12);
        assert!(check_edge_lengths(&m, 0.0).is_err());
    }
}
