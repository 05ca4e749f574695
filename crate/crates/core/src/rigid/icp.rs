use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_rigid_motion, RigidMotion};
use crate::mesh::SurfaceMesh;
use crate::{Error, Result, Vec3};

/// Closest point to `p` on triangle `abc`.
pub(crate) fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Uniform hash grid over surface triangles for closest-point queries.
#[derive(Debug, Clone)]
pub struct SurfaceIndex {
    triangles: Vec<[Vec3; 3]>,
    cell: f64,
    lo: [i64; 3],
    hi: [i64; 3],
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl SurfaceIndex {
    pub fn new(surface: &SurfaceMesh) -> Result<Self> {
        if surface.is_empty() {
            return Err(Error::InvalidInput("cannot index an empty surface".into()));
        }
        let triangles: Vec<[Vec3; 3]> = (0..surface.len()).map(|t| surface.corners(t)).collect();
        let mean_edge = triangles
            .iter()
            .map(|[a, b, c]| ((b - a).norm() + (c - b).norm() + (a - c).norm()) / 3.0)
            .sum::<f64>()
            / triangles.len() as f64;
        let cell = if mean_edge > 0.0 { mean_edge } else { 1.0 };
        let key = |p: &Vec3| [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64];

        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (t, tri) in triangles.iter().enumerate() {
            let mn = tri[0].inf(&tri[1]).inf(&tri[2]);
            let mx = tri[0].sup(&tri[1]).sup(&tri[2]);
            let (k0, k1) = (key(&mn), key(&mx));
            for a in 0..3 {
                lo[a] = lo[a].min(k0[a]);
                hi[a] = hi[a].max(k1[a]);
            }
            for i in k0[0]..=k1[0] {
                for j in k0[1]..=k1[1] {
                    for k in k0[2]..=k1[2] {
                        buckets.entry([i, j, k]).or_default().push(t);
                    }
                }
            }
        }
        Ok(SurfaceIndex {
            triangles,
            cell,
            lo,
            hi,
            buckets,
        })
    }

    /// Closest surface point to `p` and the triangle it lies on.
    pub fn closest(&self, p: &Vec3) -> (Vec3, usize) {
        let c = [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ];
        // ring radius beyond which every occupied cell has been visited
        let last = (0..3)
            .map(|a| (c[a] - self.lo[a]).abs().max((self.hi[a] - c[a]).abs()))
            .max()
            .unwrap();
        let mut best = (f64::INFINITY, Vec3::zeros(), usize::MAX);
        for r in 0..=last {
            for i in c[0] - r..=c[0] + r {
                if i < self.lo[0] || i > self.hi[0] {
                    continue;
                }
                for j in c[1] - r..=c[1] + r {
                    if j < self.lo[1] || j > self.hi[1] {
                        continue;
                    }
                    for k in c[2] - r..=c[2] + r {
                        if k < self.lo[2] || k > self.hi[2] {
                            continue;
                        }
                        let shell = (i - c[0]).abs().max((j - c[1]).abs()).max((k - c[2]).abs());
                        if shell != r {
                            continue;
                        }
                        if let Some(list) = self.buckets.get(&[i, j, k]) {
                            for &t in list {
                                let [a, b, cc] = &self.triangles[t];
                                let q = closest_point_on_triangle(p, a, b, cc);
                                let d = (q - p).norm_squared();
                                if d < best.0 || (d == best.0 && t < best.2) {
                                    best = (d, q, t);
                                }
                            }
                        }
                    }
                }
            }
            // unvisited triangles are at least r cells away
            let bound = r as f64 * self.cell;
            if best.0 <= bound * bound {
                break;
            }
        }
        (best.1, best.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignOptions {
    pub max_iterations: usize,
    /// Stop once the mean correspondence shift of an iteration falls below this (mm).
    pub tol_mm: f64,
    pub initial: RigidMotion,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            max_iterations: 50,
            tol_mm: 1e-4,
            initial: RigidMotion::identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    /// Maps cloud coordinates into the surface frame.
    pub motion: RigidMotion,
    /// Rms point-to-surface distance after alignment (mm).
    pub rms_mm: f64,
    pub iterations: usize,
    /// Rms distance at the start of every iteration.
    pub residual_trace: Vec<f64>,
}

fn residuals(index: &SurfaceIndex, pts: &[Vec3]) -> (Vec<Vec3>, f64) {
    let closest: Vec<Vec3> = pts.par_iter().map(|p| index.closest(p).0).collect();
    let ss: f64 = pts.iter().zip(&closest).map(|(p, q)| (p - q).norm_squared()).sum();
    (closest, (ss / pts.len() as f64).sqrt())
}

/// Iterative closest point alignment of `cloud` onto `target`.
pub fn align_frames(cloud: &[Vec3], target: &SurfaceMesh, opts: &AlignOptions) -> Result<Registration> {
    if cloud.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 cloud points, got {}", cloud.len())));
    }
    opts.initial.validate()?;
    let index = SurfaceIndex::new(target)?;
    let mut motion = opts.initial;
    let mut trace = Vec::new();
    let mut rising = 0;
    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        let moved: Vec<Vec3> = cloud.iter().map(|p| motion.apply(p)).collect();
        let (closest, rms) = residuals(&index, &moved);
        if let Some(&prev) = trace.last() {
            rising = if rms > prev { rising + 1 } else { 0 };
        }
        trace.push(rms);
        if rising >= 3 {
            return Err(Error::Diverged(trace));
        }
        let (step, _) = fit_rigid_motion(&moved, &closest)?;
        motion = step.compose(&motion);
        iterations += 1;
        let shift = moved.iter().map(|p| step.displacement(p).norm()).sum::<f64>() / moved.len() as f64;
        log::debug!("icp iteration {iterations}: rms {rms:.3e} mm, shift {shift:.3e} mm");
        if shift < opts.tol_mm {
            break;
        }
    }
    let moved: Vec<Vec3> = cloud.iter().map(|p| motion.apply(p)).collect();
    let (_, rms_mm) = residuals(&index, &moved);
    Ok(Registration {
        motion,
        rms_mm,
        iterations,
        residual_trace: trace,
    })
}
