use std::collections::BTreeSet;

use rayon::prelude::*;

use super::element::{tet10_stiffness, ElementMatrix};
use super::sparse::CsrMatrix;
use crate::material::MaterialField;
use crate::mesh::Mesh;
use crate::quadrature::TetRule;
use crate::{Error, Result};

/// Global stiffness over all `3 · nodes` DOFs plus the external load.
#[derive(Debug, Clone)]
pub struct ElasticitySystem {
    pub stiffness: CsrMatrix,
    pub load: Vec<f64>,
}

impl ElasticitySystem {
    pub fn num_dofs(&self) -> usize {
        self.load.len()
    }
}

fn node_pattern(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); mesh.num_nodes()];
    for conn in mesh.elements() {
        for &a in conn {
            adj[a].extend(conn.iter().copied());
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Scatter-adds element matrices into the global matrix.
///
/// Element matrices may be computed in parallel; the scatter itself runs in
/// element order so the sums are bitwise reproducible.
pub fn assemble(mesh: &Mesh, materials: &MaterialField, rule: TetRule) -> Result<ElasticitySystem> {
    if materials.len() != mesh.num_elements() {
        return Err(Error::InvalidInput(format!(
            "material field has {} entries for {} elements",
            materials.len(),
            mesh.num_elements()
        )));
    }
    if let Some(e) = (0..mesh.num_elements()).find(|&e| materials.get(e).is_none()) {
        return Err(Error::MissingMaterial(e));
    }

    let pattern = node_pattern(mesh);
    let dof_rows: Vec<Vec<usize>> = pattern
        .iter()
        .flat_map(|nbrs| {
            let cols: Vec<usize> = nbrs.iter().flat_map(|&m| [3 * m, 3 * m + 1, 3 * m + 2]).collect();
            [cols.clone(), cols.clone(), cols]
        })
        .collect();
    let mut k = CsrMatrix::from_pattern(3 * mesh.num_nodes(), dof_rows);

    const BATCH: usize = 2048;
    for start in (0..mesh.num_elements()).step_by(BATCH) {
        let end = (start + BATCH).min(mesh.num_elements());
        let blocks: Vec<Result<Box<ElementMatrix>>> = (start..end)
            .into_par_iter()
            .map(|e| {
                let m = materials.get(e).expect("checked above");
                tet10_stiffness(&mesh.element_coords(e), m.e_mpa, m.nu, rule).map_err(|err| Error::BadElement {
                    element: e,
                    reason: err.to_string(),
                })
            })
            .collect();
        for (offset, ke) in blocks.into_iter().enumerate() {
            let ke = ke?;
            let conn = &mesh.elements()[start + offset];
            for (a, &na) in conn.iter().enumerate() {
                for (b, &nb) in conn.iter().enumerate() {
                    for i in 0..3 {
                        for j in 0..3 {
                            k.add(3 * na + i, 3 * nb + j, ke[(3 * a + i, 3 * b + j)]);
                        }
                    }
                }
            }
        }
    }
    Ok(ElasticitySystem {
        load: vec![0.0; 3 * mesh.num_nodes()],
        stiffness: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{assign_uniform, MaterialField};
    use crate::mesh::test_meshes::{tet_pair, unit_tet};
    use crate::mesh::{Mesh, Part, PartRole};
    use crate::Vec3;
    use std::collections::BTreeMap;

    fn uniform(mesh: &Mesh, e: f64, nu: f64) -> MaterialField {
        assign_uniform(mesh, &MaterialField::empty(mesh.num_elements()), 0, e, nu).unwrap()
    }

    #[test]
    fn single_element_matches_element_matrix() {
        let m = unit_tet();
        let sys = assemble(&m, &uniform(&m, 10.0, 0.2), TetRule::ElevenPoint).unwrap();
        let ke = tet10_stiffness(&m.element_coords(0), 10.0, 0.2, TetRule::ElevenPoint).unwrap();
        let conn = m.elements()[0];
        for a in 0..10 {
            for b in 0..10 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(sys.stiffness.get(3 * conn[a] + i, 3 * conn[b] + j), ke[(3 * a + i, 3 * b + j)]);
                    }
                }
            }
        }
        assert!(sys.load.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn disjoint_elements_are_block_diagonal() {
        let u = unit_tet();
        let mut nodes = u.nodes().to_vec();
        nodes.extend(u.nodes().iter().map(|p| p + Vec3::new(5.0, 0.0, 0.0)));
        let conn0 = u.elements()[0];
        let conn1 = conn0.map(|n| n + 10);
        let parts = BTreeMap::from([(0, Part { name: "a".into(), role: PartRole::Vertebra })]);
        let m = Mesh::new(nodes, vec![conn0, conn1], vec![0, 0], parts).unwrap();
        let sys = assemble(&m, &uniform(&m, 1.0, 0.3), TetRule::ElevenPoint).unwrap();
        let dense = sys.stiffness.to_dense();
        assert!(dense.view((0, 30), (30, 30)).iter().all(|&v| v == 0.0));
        assert!(dense.view((30, 0), (30, 30)).iter().all(|&v| v == 0.0));
        // translated copies differ only by round-off
        let d = dense.view((0, 0), (30, 30)) - dense.view((30, 30), (30, 30));
        assert!(d.abs().max() < 1e-12 * dense.abs().max());
    }

    #[test]
    fn shared_face_entries_sum_contributions() {
        let m = tet_pair();
        let mat = uniform(&m, 5.0, 0.25);
        let sys = assemble(&m, &mat, TetRule::ElevenPoint).unwrap();
        let k0 = tet10_stiffness(&m.element_coords(0), 5.0, 0.25, TetRule::ElevenPoint).unwrap();
        let k1 = tet10_stiffness(&m.element_coords(1), 5.0, 0.25, TetRule::ElevenPoint).unwrap();
        // hand scatter into a dense matrix
        let n = 3 * m.num_nodes();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (e, ke) in [(0, &k0), (1, &k1)] {
            let conn = m.elements()[e];
            for a in 0..10 {
                for b in 0..10 {
                    for i in 0..3 {
                        for j in 0..3 {
                            dense[(3 * conn[a] + i, 3 * conn[b] + j)] += ke[(3 * a + i, 3 * b + j)];
                        }
                    }
                }
            }
        }
        assert!((sys.stiffness.to_dense() - dense).abs().max() < 1e-13);
        assert!(sys.stiffness.asymmetry() < 1e-12);
    }

    #[test]
    fn missing_material_reported() {
        let m = tet_pair();
        let mut f = MaterialField::empty(2);
        f.set(0, uniform(&m, 1.0, 0.3).get(0).copied().unwrap());
        assert!(matches!(assemble(&m, &f, TetRule::ElevenPoint), Err(Error::MissingMaterial(1))));
    }
}
