//! Synthetic stand-ins for the scan and the optical measurement.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fe::DisplacementField;
use crate::material::VoxelGrid;
use crate::mesh::{PartRole, PhantomSpec, SurfaceMesh};
use crate::metrics::MeasurementCloud;
use crate::{Error, Result, Vec3};

/// Spherical low-density region inside a vertebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lesion {
    pub center_mm: [f64; 3],
    pub radius_mm: f64,
    pub hu: f64,
}

/// HU layout of the phantom: a cortical shell around a trabecular core in
/// each vertebra, dense pots and soft discs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCtSpec {
    pub spacing_mm: [f64; 3],
    pub shell_mm: f64,
    pub cortical_hu: f64,
    pub trabecular_hu: f64,
    pub disc_hu: f64,
    pub pot_hu: f64,
    pub background_hu: f64,
    pub lesion: Option<Lesion>,
}

impl Default for SyntheticCtSpec {
    fn default() -> Self {
        SyntheticCtSpec {
            spacing_mm: [0.24, 0.24, 1.0],
            shell_mm: 1.0,
            cortical_hu: 1100.0,
            trabecular_hu: 220.0,
            disc_hu: 40.0,
            pot_hu: 1500.0,
            background_hu: -1000.0,
            lesion: None,
        }
    }
}

impl SyntheticCtSpec {
    pub fn validate(&self) -> Result<()> {
        if self.spacing_mm.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("voxel spacing {:?} must be positive", self.spacing_mm)));
        }
        if !(self.shell_mm >= 0.0) {
            return Err(Error::InvalidInput("shell thickness must be non-negative".into()));
        }
        if let Some(l) = &self.lesion {
            if !(l.radius_mm > 0.0) {
                return Err(Error::InvalidInput("lesion radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// HU at a point of the phantom described by `phantom`.
    pub fn hu_at(&self, phantom: &PhantomSpec, p: Vec3) -> f64 {
        let (hx, hy) = (0.5 * phantom.width_mm, 0.5 * phantom.depth_mm);
        if p.x.abs() > hx || p.y.abs() > hy {
            return self.background_hu;
        }
        let mut z0 = 0.0;
        for (_, role, height, _) in phantom.layers() {
            let z1 = z0 + height;
            if p.z >= z0 && p.z <= z1 {
                return match role {
                    PartRole::Pot => self.pot_hu,
                    PartRole::Disc => self.disc_hu,
                    PartRole::Vertebra => {
                        if let Some(l) = &self.lesion {
                            if (p - Vec3::from(l.center_mm)).norm() <= l.radius_mm {
                                return l.hu;
                            }
                        }
                        let depth = (hx - p.x.abs()).min(hy - p.y.abs()).min(p.z - z0).min(z1 - p.z);
                        if depth < self.shell_mm {
                            self.cortical_hu
                        } else {
                            self.trabecular_hu
                        }
                    }
                };
            }
            z0 = z1;
        }
        self.background_hu
    }
}

/// Voxelises the phantom, padding one voxel of background on every side.
pub fn synthetic_ct(phantom: &PhantomSpec, spec: &SyntheticCtSpec) -> Result<VoxelGrid> {
    phantom.validate()?;
    spec.validate()?;
    let lo = Vec3::new(-0.5 * phantom.width_mm, -0.5 * phantom.depth_mm, 0.0);
    let hi = Vec3::new(0.5 * phantom.width_mm, 0.5 * phantom.depth_mm, phantom.total_height());
    let s = spec.spacing_mm;
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        let n = ((hi[a] - lo[a]) / s[a]).ceil() as usize;
        dims[a] = n + 2;
        // centre the grid on the phantom
        origin[a] = 0.5 * (lo[a] + hi[a]) - 0.5 * (dims[a] - 1) as f64 * s[a];
    }
    VoxelGrid::from_fn(dims, s, origin, |p| spec.hu_at(phantom, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticMeasurementSpec {
    pub spacing_mm: f64,
    /// Magnitude of one constant bias vector added to every point.
    pub systematic_mm: f64,
    /// Per-component standard deviation of independent point noise.
    pub random_std_mm: f64,
    pub seed: u64,
    /// Keep every surface vertex as a sample; area samples fill the rest.
    pub include_vertices: bool,
}

impl Default for SyntheticMeasurementSpec {
    fn default() -> Self {
        SyntheticMeasurementSpec {
            spacing_mm: 2.0,
            systematic_mm: 0.010,
            random_std_mm: 0.025,
            seed: 0,
            include_vertices: true,
        }
    }
}

impl SyntheticMeasurementSpec {
    pub fn noiseless(spacing_mm: f64) -> Self {
        SyntheticMeasurementSpec {
            spacing_mm,
            systematic_mm: 0.0,
            random_std_mm: 0.0,
            ..SyntheticMeasurementSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_mm > 0.0 && self.spacing_mm.is_finite()) {
            return Err(Error::InvalidInput(format!("sampling spacing must be positive, got {}", self.spacing_mm)));
        }
        if !(self.systematic_mm >= 0.0 && self.systematic_mm.is_finite())
            || !(self.random_std_mm >= 0.0 && self.random_std_mm.is_finite())
        {
            return Err(Error::InvalidInput("measurement errors must be non-negative".into()));
        }
        Ok(())
    }
}

/// Accepts points that keep at least `spacing` from every earlier one.
struct Thinner {
    spacing: f64,
    cells: HashMap<[i64; 3], Vec<Vec3>>,
}

impl Thinner {
    fn key(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| (p[a] / self.spacing).floor() as i64)
    }

    fn insert(&mut self, p: Vec3) {
        let k = self.key(&p);
        self.cells.entry(k).or_default().push(p);
    }

    fn try_insert(&mut self, p: Vec3) -> bool {
        let k = self.key(&p);
        let s2 = self.spacing * self.spacing;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(pts) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if pts.iter().any(|q| (q - p).norm_squared() < s2) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry(k).or_default().push(p);
        true
    }
}

/// Oversampling factor of the area-weighted candidate pool.
const CANDIDATES_PER_DISK: f64 = 4.0;

/// Samples the surface at roughly `spec.spacing_mm`, interpolates the
/// corner displacements and adds a bias plus Gaussian noise.
pub fn synth_measurement(
    surface: &SurfaceMesh,
    disp: &DisplacementField,
    spec: &SyntheticMeasurementSpec,
) -> Result<MeasurementCloud> {
    spec.validate()?;
    if surface.is_empty() {
        return Err(Error::InvalidInput("surface has no triangles".into()));
    }
    if let Some(&n) = surface.vertices().iter().find(|&&n| n >= disp.len()) {
        return Err(Error::NodeOutOfRange {
            index: n,
            count: disp.len(),
        });
    }
    let (lo, hi) = surface.bounds();
    let extent = (hi - lo).norm();
    if spec.spacing_mm > extent {
        return Err(Error::InvalidInput(format!(
            "sampling spacing {} mm exceeds the surface extent {extent:.3} mm",
            spec.spacing_mm
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);

    let mut thinner = Thinner {
        spacing: spec.spacing_mm,
        cells: HashMap::new(),
    };
    let mut points = Vec::new();
    let mut values = Vec::new();
    if spec.include_vertices {
        for (&n, &p) in surface.vertices().iter().zip(surface.vertex_positions()) {
            thinner.insert(p);
            points.push(p);
            values.push(disp.get(n));
        }
    }
    let disk = spec.spacing_mm * spec.spacing_mm;
    for (t, tri) in surface.triangles().iter().enumerate() {
        let c = surface.corners(t);
        let u = tri.nodes.map(|n| disp.get(n));
        let m = (CANDIDATES_PER_DISK * surface.area(t) / disk).ceil().max(1.0) as usize;
        for _ in 0..m {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let w = [1.0 - s, s * (1.0 - r2), s * r2];
            let p = w[0] * c[0] + w[1] * c[1] + w[2] * c[2];
            if thinner.try_insert(p) {
                points.push(p);
                values.push(w[0] * u[0] + w[1] * u[1] + w[2] * u[2]);
            }
        }
    }

    let dir: Vec3 = loop {
        let v = Vec3::from_fn(|_, _| StandardNormal.sample(&mut noise_rng));
        if v.norm() > 1e-6 {
            break v.normalize();
        }
    };
    let bias = dir * spec.systematic_mm;
    if spec.systematic_mm > 0.0 || spec.random_std_mm > 0.0 {
        let normal = Normal::new(0.0, spec.random_std_mm).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for v in &mut values {
            let noise = Vec3::from_fn(|_, _| normal.sample(&mut noise_rng));
            *v += bias + noise;
        }
    }
    MeasurementCloud::new(points, values)
}
