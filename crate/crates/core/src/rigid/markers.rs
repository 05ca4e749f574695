use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{fit_rigid_motion, RigidMotion};
use crate::{Error, Result, Vec3};

/// Labelled marker positions at the reference (step 0) and deformed
/// (step 1) states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSet {
    pub labels: Vec<String>,
    pub reference: Vec<Vec3>,
    pub deformed: Vec<Vec3>,
}

impl MarkerSet {
    pub fn new(labels: Vec<String>, reference: Vec<Vec3>, deformed: Vec<Vec3>) -> Result<Self> {
        if labels.len() != reference.len() || labels.len() != deformed.len() {
            return Err(Error::InvalidInput("marker label and position counts differ".into()));
        }
        if labels.len() < 3 {
            return Err(Error::InsufficientData(format!("need at least 3 markers, got {}", labels.len())));
        }
        Ok(MarkerSet {
            labels,
            reference,
            deformed,
        })
    }

    /// Markers at `points` moved by `motion`, labelled `m0, m1, ...`.
    pub fn from_motion(points: &[Vec3], motion: &RigidMotion) -> Result<Self> {
        MarkerSet::new(
            (0..points.len()).map(|i| format!("m{i}")).collect(),
            points.to_vec(),
            points.iter().map(|p| motion.apply(p)).collect(),
        )
    }

    /// Rigid motion of the marker carrier and its rms residual (mm).
    pub fn motion(&self) -> Result<(RigidMotion, f64)> {
        fit_rigid_motion(&self.reference, &self.deformed)
    }
}

/// Reads `label,step,x,y,z` rows (step 0 or 1); a header row is optional.
pub fn read_markers(path: &Path) -> Result<MarkerSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_markers(&text, &path.display().to_string())
}

pub(crate) fn parse_markers(text: &str, origin: &str) -> Result<MarkerSet> {
    let mut steps: [BTreeMap<String, Vec3>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut order: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && f.first() == Some(&"label") {
            continue;
        }
        let bad = |msg: String| Error::parse(origin, lineno + 1, msg);
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", f.len())));
        }
        let step: usize = f[1].parse().map_err(|_| bad(format!("bad step {:?}", f[1])))?;
        if step > 1 {
            return Err(bad(format!("step must be 0 or 1, got {step}")));
        }
        let mut xyz = [0.0; 3];
        for k in 0..3 {
            xyz[k] = f[2 + k].parse().map_err(|_| bad(format!("bad coordinate {:?}", f[2 + k])))?;
        }
        let label = f[0].to_string();
        if step == 0 && !steps[0].contains_key(&label) {
            order.push(label.clone());
        }
        if steps[step].insert(label.clone(), Vec3::from(xyz)).is_some() {
            return Err(bad(format!("duplicate marker {label:?} at step {step}")));
        }
    }
    if steps[0].len() != steps[1].len() || steps[0].keys().any(|k| !steps[1].contains_key(k)) {
        return Err(Error::InvalidInput("marker labels differ between steps 0 and 1".into()));
    }
    let reference = order.iter().map(|l| steps[0][l]).collect();
    let deformed = order.iter().map(|l| steps[1][l]).collect();
    MarkerSet::new(order, reference, deformed)
}

pub fn write_markers(markers: &MarkerSet, path: &Path) -> Result<()> {
    let mut out = String::from("label,step,x,y,z\n");
    for (step, pts) in [(0, &markers.reference), (1, &markers.deformed)] {
        for (l, p) in markers.labels.iter().zip(pts.iter()) {
            let _ = writeln!(out, "{l},{step},{},{},{}", p.x, p.y, p.z);
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
