use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::Mesh;
use crate::{Error, Result, Vec3};

/// Nodal displacements (mm) over every mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    values: Vec<Vec3>,
}

impl DisplacementField {
    pub fn new(values: Vec<Vec3>) -> Result<Self> {
        if let Some(n) = values.iter().position(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite displacement at node {n}")));
        }
        Ok(DisplacementField { values })
    }

    pub fn zeros(num_nodes: usize) -> Self {
        DisplacementField {
            values: vec![Vec3::zeros(); num_nodes],
        }
    }

    pub(crate) fn from_dofs(dofs: &[f64]) -> Self {
        DisplacementField {
            values: dofs.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: usize) -> Vec3 {
        self.values[node]
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Writes `node_id,x,y,z,ux,uy,uz`.
pub fn write_displacements(mesh: &Mesh, u: &DisplacementField, path: &Path) -> Result<()> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::InvalidInput("displacement field does not match the mesh".into()));
    }
    let mut out = String::from("node_id,x,y,z,ux,uy,uz\n");
    for (n, (p, d)) in mesh.nodes().iter().zip(u.values()).enumerate() {
        let _ = writeln!(out, "{n},{},{},{},{:e},{:e},{:e}", p.x, p.y, p.z, d.x, d.y, d.z);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a displacement CSV; node ids must run 0, 1, 2, ...
pub fn read_displacements(path: &Path) -> Result<(Vec<Vec3>, DisplacementField)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut pos = Vec::new();
    let mut disp = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("node_id") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(Error::parse(&origin, i + 1, format!("expected 7 fields, found {}", f.len())));
        }
        let id: usize = f[0].parse().map_err(|_| Error::parse(&origin, i + 1, "bad node id"))?;
        if id != pos.len() {
            return Err(Error::parse(&origin, i + 1, format!("expected node id {}, found {id}", pos.len())));
        }
        let mut v = [0.0; 6];
        for k in 0..6 {
            v[k] = f[1 + k]
                .parse()
                .map_err(|_| Error::parse(&origin, i + 1, format!("bad number {:?}", f[1 + k])))?;
        }
        pos.push(Vec3::new(v[0], v[1], v[2]));
        disp.push(Vec3::new(v[3], v[4], v[5]));
    }
    Ok((pos, DisplacementField::new(disp)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_meshes::unit_tet;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = unit_tet();
        let u = DisplacementField::new((0..10).map(|i| Vec3::new(i as f64 * 1e-3 / 3.0, -0.1, 1e-17)).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        write_displacements(&m, &u, &path).unwrap();
        let (pos, back) = read_displacements(&path).unwrap();
        assert_eq!(back, u);
        assert_eq!(pos, m.nodes());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DisplacementField::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }
}
