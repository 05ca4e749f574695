//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! NODES
//! 0 x y z              (mm, ids ascending from 0)
//! ELEMENTS
//! 0 part n0 n1 ... n9  (tet10 ordering)
//! PARTS
//! 0 name ROLE          (ROLE: VERTEBRA | DISC | POT)
//! ```
//!
//! Fields are whitespace separated; `#` starts a comment anywhere on a line.
//! Sections may appear in any order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, Part, PartId, PartRole};
use crate::{Error, Result, Vec3};

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("# tet10 mesh, units mm\n");
    out.push_str("PARTS\n");
    for (id, p) in mesh.parts() {
        let _ = writeln!(out, "{id} {} {}", p.name, p.role.as_str());
    }
    out.push_str("NODES\n");
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", p.x, p.y, p.z);
    }
    out.push_str("ELEMENTS\n");
    for (e, conn) in mesh.elements().iter().enumerate() {
        let _ = write!(out, "{e} {}", mesh.element_part(e));
        for n in conn {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy)]
enum Section {
    None,
    Nodes,
    Elements,
    Parts,
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, &path.display().to_string())
}

pub(crate) fn parse_mesh(text: &str, origin: &str) -> Result<Mesh> {
    let mut section = Section::None;
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    let mut element_parts = Vec::new();
    let mut parts = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| Error::parse(origin, lineno + 1, msg);
        match fields[0] {
            "NODES" => {
                section = Section::Nodes;
                continue;
            }
            "ELEMENTS" => {
                section = Section::Elements;
                continue;
            }
            "PARTS" => {
                section = Section::Parts;
                continue;
            }
            _ => {}
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("expected integer, got {s:?}")));
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("expected number, got {s:?}")));
        match section {
            Section::None => return Err(bad("data before any section header".into())),
            Section::Nodes => {
                if fields.len() != 4 {
                    return Err(bad(format!("node line needs 4 fields, found {}", fields.len())));
                }
                let id = int(fields[0])?;
                if id != nodes.len() {
                    return Err(bad(format!("node ids must ascend from 0; expected {}, got {id}", nodes.len())));
                }
                nodes.push(Vec3::new(float(fields[1])?, float(fields[2])?, float(fields[3])?));
            }
            Section::Elements => {
                if fields.len() != 12 {
                    return Err(bad(format!("element line needs 12 fields, found {}", fields.len())));
                }
                let id = int(fields[0])?;
                if id != elements.len() {
                    return Err(bad(format!(
                        "element ids must ascend from 0; expected {}, got {id}",
                        elements.len()
                    )));
                }
                let part = fields[1]
                    .parse::<PartId>()
                    .map_err(|_| bad(format!("bad part id {:?}", fields[1])))?;
                let mut conn = [0usize; 10];
                for (k, f) in fields[2..].iter().enumerate() {
                    conn[k] = int(f)?;
                }
                elements.push(conn);
                element_parts.push(part);
            }
            Section::Parts => {
                if fields.len() != 3 {
                    return Err(bad(format!("part line needs 3 fields, found {}", fields.len())));
                }
                let id = fields[0]
                    .parse::<PartId>()
                    .map_err(|_| bad(format!("bad part id {:?}", fields[0])))?;
                let role = PartRole::parse(fields[2]).ok_or_else(|| bad(format!("unknown role {:?}", fields[2])))?;
                let part = Part {
                    name: fields[1].to_string(),
                    role,
                };
                if parts.insert(id, part).is_some() {
                    return Err(bad(format!("duplicate part id {id}")));
                }
            }
        }
    }
    Mesh::new(nodes, elements, element_parts, parts)
}
