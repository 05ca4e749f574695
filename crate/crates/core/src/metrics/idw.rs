use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Distance (mm) under which a sample counts as coincident with the query.
pub const EXACT_HIT_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdwOptions {
    pub power: f64,
    pub radius_mm: f64,
}

impl Default for IdwOptions {
    fn default() -> Self {
        IdwOptions {
            power: 2.0,
            radius_mm: 1.0,
        }
    }
}

impl IdwOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidInput(format!("IDW power must be positive, got {}", self.power)));
        }
        if !(self.radius_mm > 0.0 && self.radius_mm.is_finite()) {
            return Err(Error::InvalidInput(format!("IDW radius must be positive, got {}", self.radius_mm)));
        }
        Ok(())
    }
}

/// Measured displacement vectors (mm) at scattered positions (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCloud {
    pub points: Vec<Vec3>,
    pub values: Vec<Vec3>,
    /// `false` marks points without a usable measurement.
    pub valid: Vec<bool>,
}

impl MeasurementCloud {
    pub fn new(points: Vec<Vec3>, values: Vec<Vec3>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidInput("cloud positions and values differ in length".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidInput(format!("cloud point {i} has non-finite position")));
        }
        let valid = values.iter().map(|v| v.iter().all(|c| c.is_finite())).collect();
        Ok(MeasurementCloud { points, values, valid })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Positions and values of the valid points only.
    pub fn valid_parts(&self) -> (Vec<Vec3>, Vec<Vec3>) {
        self.points
            .iter()
            .zip(&self.values)
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|((p, v), _)| (*p, *v))
            .unzip()
    }
}

/// Reads `x,y,z,ux,uy,uz` (mm); a header row is optional and `nan` values
/// mark invalid points.
pub fn read_cloud(path: &Path) -> Result<MeasurementCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(Error::parse(&origin, i + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let mut v = [0.0; 6];
        for k in 0..6 {
            v[k] = f[k]
                .parse()
                .map_err(|_| Error::parse(&origin, i + 1, format!("bad number {:?}", f[k])))?;
        }
        points.push(Vec3::new(v[0], v[1], v[2]));
        values.push(Vec3::new(v[3], v[4], v[5]));
    }
    MeasurementCloud::new(points, values)
}

pub fn write_cloud(cloud: &MeasurementCloud, path: &Path) -> Result<()> {
    let mut out = String::from("x,y,z,ux,uy,uz\n");
    for ((p, v), ok) in cloud.points.iter().zip(&cloud.values).zip(&cloud.valid) {
        if *ok {
            let _ = writeln!(out, "{},{},{},{:e},{:e},{:e}", p.x, p.y, p.z, v.x, v.y, v.z);
        } else {
            let _ = writeln!(out, "{},{},{},NaN,NaN,NaN", p.x, p.y, p.z);
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Hash grid over sample positions with cell size equal to the search radius.
struct PointGrid {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        PointGrid { cell, buckets }
    }

    fn key(p: &Vec3, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    /// Sample indices within `radius` of `q`, ascending.
    fn within(&self, points: &[Vec3], q: &Vec3, radius: f64) -> Vec<(usize, f64)> {
        let c = Self::key(q, self.cell);
        let mut out = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    if let Some(list) = self.buckets.get(&[c[0] + i, c[1] + j, c[2] + k]) {
                        for &s in list {
                            let d = (points[s] - q).norm();
                            if d <= radius {
                                out.push((s, d));
                            }
                        }
                    }
                }
            }
        }
        out.sort_by_key(|&(s, _)| s);
        out
    }
}

/// Inverse-distance weighted values at `queries`; `None` where no sample
/// lies within the radius.
pub fn idw_interpolate<T>(points: &[Vec3], values: &[T], queries: &[Vec3], opts: &IdwOptions) -> Result<Vec<Option<T>>>
where
    T: Copy + Send + Sync + Add<Output = T> + Mul<f64, Output = T>,
{
    opts.validate()?;
    if points.len() != values.len() {
        return Err(Error::InvalidInput("sample positions and values differ in length".into()));
    }
    let grid = PointGrid::new(points, opts.radius_mm);
    Ok(queries
        .par_iter()
        .map(|q| {
            let near = grid.within(points, q, opts.radius_mm);
            if let Some(&(s, _)) = near
                .iter()
                .filter(|(_, d)| *d <= EXACT_HIT_MM)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            {
                return Some(values[s]);
            }
            let mut wsum = 0.0;
            let mut acc: Option<T> = None;
            for &(s, d) in &near {
                let w = d.powf(-opts.power);
                wsum += w;
                acc = Some(match acc {
                    None => values[s] * w,
                    Some(a) => a + values[s] * w,
                });
            }
            acc.map(|a| a * (1.0 / wsum))
        })
        .collect())
}
