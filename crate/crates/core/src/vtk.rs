//! Legacy ASCII VTK unstructured-grid output for external viewers.

use std::fmt::Write as _;
use std::path::Path;

use crate::fe::DisplacementField;
use crate::mesh::{Mesh, SurfaceMesh};
use crate::strain::SurfaceStrainField;
use crate::{Error, Result};

/// VTK_QUADRATIC_TETRA; its node order matches ours.
const VTK_QUADRATIC_TETRA: u8 = 24;
const VTK_TRIANGLE: u8 = 5;

fn header(out: &mut String, title: &str) {
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
}

/// Volume mesh with part ids as cell data and, when given, displacements
/// as point data.
pub fn format_volume(mesh: &Mesh, u: Option<&DisplacementField>) -> Result<String> {
    if let Some(u) = u {
        if u.len() != mesh.num_nodes() {
            return Err(Error::InvalidInput(format!(
                "displacement field has {} nodes, mesh has {}",
                u.len(),
                mesh.num_nodes()
            )));
        }
    }
    let mut out = String::new();
    header(&mut out, "spinefe tet10 mesh");
    let _ = writeln!(out, "POINTS {} double", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    let ne = mesh.num_elements();
    let _ = writeln!(out, "CELLS {ne} {}", ne * 11);
    for conn in mesh.elements() {
        out.push_str("10");
        for n in conn {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(out, "{VTK_QUADRATIC_TETRA}");
    }
    let _ = writeln!(out, "CELL_DATA {ne}\nSCALARS part int 1\nLOOKUP_TABLE default");
    for &p in mesh.element_parts() {
        let _ = writeln!(out, "{p}");
    }
    if let Some(u) = u {
        let _ = writeln!(out, "POINT_DATA {}\nVECTORS displacement double", mesh.num_nodes());
        for v in u.values() {
            let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
        }
    }
    Ok(out)
}

pub fn write_volume(mesh: &Mesh, u: Option<&DisplacementField>, path: &Path) -> Result<()> {
    std::fs::write(path, format_volume(mesh, u)?).map_err(|e| Error::io(path, e))
}

/// Surface triangles with principal strains (µε) and RoI index as cell
/// data. Triangles without a strain get NaN and RoI -1.
pub fn format_surface(surface: &SurfaceMesh, field: &SurfaceStrainField) -> Result<String> {
    if field.len() != surface.len() {
        return Err(Error::InvalidInput("strain field does not match the surface".into()));
    }
    let verts = surface.vertices();
    let local = |n: usize| verts.binary_search(&n).expect("triangle node is a surface vertex");
    let mut out = String::new();
    header(&mut out, "spinefe surface strains");
    let _ = writeln!(out, "POINTS {} double", verts.len());
    for p in surface.vertex_positions() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    let nt = surface.len();
    let _ = writeln!(out, "CELLS {nt} {}", nt * 4);
    for t in surface.triangles() {
        let [a, b, c] = t.nodes.map(local);
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(out, "CELL_DATA {nt}");
    let scalar = |out: &mut String, name: &str, f: &dyn Fn(usize) -> String| {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for t in 0..nt {
            let _ = writeln!(out, "{}", f(t));
        }
    };
    let val = |t: usize, g: fn(&crate::strain::TriangleStrain) -> f64| {
        field.triangles[t].as_ref().map_or("nan".to_string(), |s| (g(s) * 1e6).to_string())
    };
    scalar(&mut out, "eps_max_ue", &|t| val(t, |s| s.eps_max));
    scalar(&mut out, "eps_min_ue", &|t| val(t, |s| s.eps_min));
    scalar(&mut out, "roi", &|t| {
        field.triangles[t]
            .as_ref()
            .map_or("-1".to_string(), |s| s.roi.index().to_string())
    });
    Ok(out)
}

pub fn write_surface(surface: &SurfaceMesh, field: &SurfaceStrainField, path: &Path) -> Result<()> {
    std::fs::write(path, format_surface(surface, field)?).map_err(|e| Error::io(path, e))
}
