use std::collections::BTreeSet;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::synth::{synth_measurement, synthetic_ct};
use crate::fe::{
    apply_bcs, assemble, fit_disc_modulus, reaction_force, solve_pcg, BoundaryConditionSet, DisplacementField,
    FitOptions, FitResult, PcgOptions, SolveStats,
};
use crate::material::{assign_role, map_materials, read_voxel_grid, MaterialField};
use crate::mesh::{
    build_phantom, extract_exterior_surface, partition_rois, read_mesh, Mesh, PartId, PartRole, RoIPartition,
    SurfaceMesh, TET10_EDGES,
};
use crate::metrics::{compare_fields, read_cloud, ComparisonReport, MeasurementCloud, RoiMeans};
use crate::quadrature::TetRule;
use crate::rigid::{align_frames, fit_rigid_motion, read_markers, rotation_angle, AlignOptions, RigidMotion};
use crate::strain::SurfaceStrainField;
use crate::{Error, Result, Vec3};

/// Exterior nodes of one part, midside nodes included.
pub fn exterior_nodes(mesh: &Mesh, part: PartId) -> Result<BTreeSet<usize>> {
    let surface = extract_exterior_surface(mesh, &BTreeSet::from([part]))?;
    let mut nodes = BTreeSet::new();
    for t in surface.triangles() {
        let conn = &mesh.elements()[t.element];
        nodes.extend(t.nodes);
        for (k, &(a, b)) in TET10_EDGES.iter().enumerate() {
            if t.nodes.contains(&conn[a]) && t.nodes.contains(&conn[b]) {
                nodes.insert(conn[4 + k]);
            }
        }
    }
    Ok(nodes)
}

/// Everything that stays fixed across a disc-modulus sweep.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: Mesh,
    /// Bone and pot properties; disc elements are filled in per solve.
    pub base_materials: MaterialField,
    pub bcs: BoundaryConditionSet,
    /// Externally visible vertebra surface.
    pub surface: SurfaceMesh,
    pub rois: RoIPartition,
    pub nu_disc: f64,
    pub stiffness_rule: TetRule,
    pub solver: PcgOptions,
}

/// One solve at a given disc modulus.
#[derive(Debug, Clone)]
pub struct Solution {
    pub e_disc_mpa: f64,
    pub displacement: DisplacementField,
    pub stats: SolveStats,
    /// Force the driven set exerts on the model (N).
    pub reaction_n: Vec3,
    pub strain: SurfaceStrainField,
}

impl Model {
    pub fn prepare(cfg: &PipelineConfig) -> Result<Model> {
        cfg.validate()?;
        let mesh = match &cfg.mesh_path {
            Some(p) => read_mesh(p)?,
            None => build_phantom(&cfg.phantom)?,
        };
        let grid = match (&cfg.voxel_grid_path, &cfg.mesh_path) {
            (Some(p), _) => read_voxel_grid(p)?,
            (None, None) => synthetic_ct(&cfg.phantom, &cfg.synthetic_ct)?,
            (None, Some(_)) => {
                return Err(Error::InvalidInput(
                    "a mesh file needs a voxel grid; set voxel_grid_path".into(),
                ))
            }
        };
        let bone = map_materials(&mesh, &grid, &cfg.calibration, &cfg.density_elasticity, cfg.mapping_rule, cfg.nu_bone)?;
        let base_materials = assign_role(&mesh, &bone, PartRole::Pot, cfg.e_pot_mpa, cfg.nu_pot)?;

        let part_id = |name: &str| {
            mesh.part_by_name(name)
                .ok_or_else(|| Error::InvalidInput(format!("mesh has no part named {name:?}")))
        };
        let fixed = exterior_nodes(&mesh, part_id(&cfg.fixed_part)?)?;
        let driven = exterior_nodes(&mesh, part_id(&cfg.driven_part)?)?;
        let bcs = match &cfg.markers_path {
            Some(p) => {
                let (m, rms) = read_markers(p)?.motion()?;
                info!("driven motion from markers: {:.4} deg, fit rms {rms:.2e} mm", rotation_angle(&m));
                BoundaryConditionSet::new(fixed, driven, m)?
            }
            None => BoundaryConditionSet::new(fixed, driven, phantom_motion(cfg))?.with_pivot(cfg.phantom.load_point()),
        };

        let vertebrae: BTreeSet<PartId> = mesh.parts_with_role(PartRole::Vertebra).into_iter().collect();
        let surface = extract_exterior_surface(&mesh, &vertebrae)?;
        let rois = partition_rois(&surface, cfg.roi.axis(), cfg.roi.fractions)?;
        Ok(Model {
            mesh,
            base_materials,
            bcs,
            surface,
            rois,
            nu_disc: cfg.nu_disc,
            stiffness_rule: cfg.stiffness_rule,
            solver: cfg.solver,
        })
    }

    pub fn materials(&self, e_disc_mpa: f64) -> Result<MaterialField> {
        assign_role(&self.mesh, &self.base_materials, PartRole::Disc, e_disc_mpa, self.nu_disc)
    }

    pub fn solve_with(&self, materials: &MaterialField) -> Result<(DisplacementField, SolveStats, Vec3)> {
        let system = assemble(&self.mesh, materials, self.stiffness_rule)?;
        let constrained = apply_bcs(&system, &self.bcs, &self.mesh)?;
        let (u, stats) = solve_pcg(&constrained, &self.solver)?;
        let reaction = reaction_force(&system.stiffness, &u, &self.bcs.driven);
        Ok((u, stats, reaction))
    }

    pub fn solve(&self, e_disc_mpa: f64) -> Result<Solution> {
        let (displacement, stats, reaction_n) = self.solve_with(&self.materials(e_disc_mpa)?)?;
        let strain = crate::strain::surface_strain_field(&self.surface, |n| Some(displacement.get(n)), &self.rois)?;
        Ok(Solution {
            e_disc_mpa,
            displacement,
            stats,
            reaction_n,
            strain,
        })
    }

    /// Small-rotation angle (degrees) recovered from the solved driven-node
    /// positions. The best-fit rotation of `I + ω×` turns by `atan |ω|`.
    pub fn driven_rotation_deg(&self, u: &DisplacementField) -> Result<f64> {
        let from: Vec<Vec3> = self.bcs.driven.iter().map(|&n| self.mesh.nodes()[n]).collect();
        let to: Vec<Vec3> = self.bcs.driven.iter().map(|&n| self.mesh.nodes()[n] + u.get(n)).collect();
        let angle = rotation_angle(&fit_rigid_motion(&from, &to)?.0);
        Ok(angle.to_radians().tan().to_degrees())
    }

    /// Loads or synthesises the measurement cloud the config asks for.
    pub fn measurement(&self, cfg: &PipelineConfig) -> Result<Option<MeasurementCloud>> {
        let cloud = if let Some(p) = &cfg.measurement_path {
            read_cloud(p)?
        } else if let Some(reference) = &cfg.synthetic_measurement {
            let sol = self.solve(reference.e_disc_mpa)?;
            let spec = super::SyntheticMeasurementSpec {
                seed: cfg.seed,
                ..reference.sampling
            };
            synth_measurement(&self.surface, &sol.displacement, &spec)?
        } else {
            return Ok(None);
        };
        if !cfg.align_measurement {
            return Ok(Some(cloud));
        }
        let reg = align_frames(&cloud.points, &self.surface, &AlignOptions::default())?;
        info!("measurement registered: rms {:.4} mm after {} iterations", reg.rms_mm, reg.iterations);
        let points = cloud.points.iter().map(|p| reg.motion.apply(p)).collect();
        let values = cloud.values.iter().map(|v| reg.motion.rotation * v).collect();
        Ok(Some(MeasurementCloud::new(points, values)?))
    }
}

/// Rotation about the lateral axis through the load point, then an axial
/// shift. Positive flexion moves the anterior (+y) side down.
pub fn phantom_motion(cfg: &PipelineConfig) -> RigidMotion {
    let rot = RigidMotion::about_point(Vec3::x(), -cfg.loading.flexion_deg.to_radians(), cfg.phantom.load_point());
    RigidMotion::translation(Vec3::new(0.0, 0.0, -cfg.loading.axial_mm)).compose(&rot)
}

/// Strain means in microstrain over the vertebra surface.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrainSummary {
    pub triangles: usize,
    pub missing: usize,
    pub mean_eps_max_ue: f64,
    pub mean_abs_eps_min_ue: f64,
    pub eps_max_ue: RoiMeans,
    pub eps_min_ue: RoiMeans,
}

impl StrainSummary {
    pub fn from_field(field: &SurfaceStrainField, rois: &RoIPartition) -> Result<StrainSummary> {
        let avg = crate::metrics::roi_average(field, rois, None)?;
        let scale = |m: RoiMeans| RoiMeans {
            left: m.left.map(|v| v * 1e6),
            central: m.central.map(|v| v * 1e6),
            right: m.right.map(|v| v * 1e6),
            total: m.total.map(|v| v * 1e6),
        };
        let n = field.valid().count();
        let abs_min = field.valid().map(|(_, t)| t.eps_min.abs()).sum::<f64>() / n.max(1) as f64;
        Ok(StrainSummary {
            triangles: field.len(),
            missing: field.missing,
            mean_eps_max_ue: avg.eps_max.total.unwrap_or(0.0) * 1e6,
            mean_abs_eps_min_ue: abs_min * 1e6,
            eps_max_ue: scale(avg.eps_max),
            eps_min_ue: scale(avg.eps_min),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepEntry {
    pub e_disc_mpa: f64,
    /// Error category and message when this entry failed.
    pub error: Option<(String, String)>,
    pub reaction_n: Option<Vec3>,
    pub reaction_magnitude_n: Option<f64>,
    pub applied_rotation_deg: f64,
    pub driven_rotation_deg: Option<f64>,
    pub solve: Option<SolveStats>,
    pub strain: Option<StrainSummary>,
    pub comparison: Option<ComparisonReport>,
    #[serde(skip)]
    pub fields: Option<Arc<(DisplacementField, SurfaceStrainField)>>,
}

impl SweepEntry {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub seed: u64,
    pub num_nodes: usize,
    pub num_elements: usize,
    pub surface_triangles: usize,
    pub measurement_points: Option<usize>,
    pub motion: RigidMotion,
    /// Ascending in `e_disc_mpa`.
    pub entries: Vec<SweepEntry>,
    #[serde(skip)]
    pub model: Option<Arc<Model>>,
}

impl SweepResult {
    pub fn num_failed(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_ok()).count()
    }
}

fn run_entry(model: &Model, e: f64, cloud: Option<&MeasurementCloud>, cfg: &PipelineConfig) -> Result<SweepEntry> {
    let sol = model.solve(e)?;
    let comparison = cloud
        .map(|c| compare_fields(c, &model.surface, &sol.displacement, &model.rois, &cfg.compare))
        .transpose()?;
    Ok(SweepEntry {
        e_disc_mpa: e,
        error: None,
        reaction_n: Some(sol.reaction_n),
        reaction_magnitude_n: Some(sol.reaction_n.norm()),
        applied_rotation_deg: rotation_angle(&model.bcs.motion),
        driven_rotation_deg: Some(model.driven_rotation_deg(&sol.displacement)?),
        solve: Some(sol.stats),
        strain: Some(StrainSummary::from_field(&sol.strain, &model.rois)?),
        comparison,
        fields: Some(Arc::new((sol.displacement, sol.strain))),
    })
}

/// Solves the model once per disc modulus (ascending). A failing entry
/// records its diagnosis and the sweep carries on.
pub fn run_sweep(cfg: &PipelineConfig) -> Result<SweepResult> {
    let model = Arc::new(Model::prepare(cfg)?);
    let cloud = model.measurement(cfg)?;
    sweep_model(&model, cloud.as_ref(), cfg)
}

pub fn sweep_model(model: &Arc<Model>, cloud: Option<&MeasurementCloud>, cfg: &PipelineConfig) -> Result<SweepResult> {
    let entries = cfg
        .sorted_e_disc()
        .into_par_iter()
        .map(|e| {
            run_entry(model, e, cloud, cfg).unwrap_or_else(|err| {
                warn!("E_disc = {e} MPa failed: {err}");
                SweepEntry {
                    e_disc_mpa: e,
                    error: Some((err.category().to_string(), err.to_string())),
                    applied_rotation_deg: rotation_angle(&model.bcs.motion),
                    ..SweepEntry::default()
                }
            })
        })
        .collect();
    Ok(SweepResult {
        seed: cfg.seed,
        num_nodes: model.mesh.num_nodes(),
        num_elements: model.mesh.num_elements(),
        surface_triangles: model.surface.len(),
        measurement_points: cloud.map(|c| c.len()),
        motion: model.bcs.motion,
        entries,
        model: Some(model.clone()),
    })
}

/// Disc modulus whose reaction-force magnitude matches `target_n`.
pub fn fit_disc(model: &Model, target_n: f64, bracket: (f64, f64), opts: &FitOptions) -> Result<FitResult> {
    fit_disc_modulus(
        |e| {
            let (_, _, r) = model.solve_with(&model.materials(e)?)?;
            info!("E_disc = {e:.6} MPa: |R| = {:.6} N", r.norm());
            Ok(r.norm())
        },
        target_n,
        bracket,
        opts,
    )
}
