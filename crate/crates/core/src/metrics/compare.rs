use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::idw::{idw_interpolate, IdwOptions, MeasurementCloud};
use super::stats::{ks_two_sample, linear_regression, percent_difference, rmse_pct};
use crate::fe::DisplacementField;
use crate::mesh::{Region, RoIPartition, SurfaceMesh};
use crate::strain::{surface_strain_field, SurfaceStrainField};
use crate::{Error, Result, Vec3};

/// Fewer compared surface nodes than this make the statistics meaningless.
pub const MIN_COMPARED_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub idw: IdwOptions,
    /// Percent differences skip measured strains with `|m|` at or below this.
    pub pct_floor_ue: f64,
    /// Weight RoI means by triangle area.
    pub area_weighted_roi: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            idw: IdwOptions::default(),
            pct_floor_ue: 10.0,
            area_weighted_roi: false,
        }
    }
}

/// Agreement statistics of one scalar quantity. Regression has the model
/// on x and the measurement on y.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatBlock {
    pub n: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub r2_degenerate: bool,
    pub rmse: Option<f64>,
    pub rmse_pct: Option<f64>,
    pub pct_diff_mean: Option<f64>,
    pub pct_diff_max: Option<f64>,
    pub pct_diff_excluded: usize,
    pub ks_d: Option<f64>,
    pub ks_p: Option<f64>,
}

impl StatBlock {
    pub fn compute(model: &[f64], measured: &[f64], pct_floor: Option<f64>) -> StatBlock {
        let mut s = StatBlock {
            n: model.len(),
            ..StatBlock::default()
        };
        if model.is_empty() {
            return s;
        }
        if let Ok(r) = linear_regression(model, measured) {
            s.slope = Some(r.slope);
            s.intercept = Some(r.intercept);
            s.r2 = Some(r.r2);
            s.r2_degenerate = r.degenerate;
        }
        if let Ok((rmse, pct)) = rmse_pct(measured, model) {
            s.rmse = Some(rmse);
            s.rmse_pct = pct;
        }
        if let Some(floor) = pct_floor {
            if let Ok(pd) = percent_difference(measured, model, floor) {
                s.pct_diff_mean = pd.mean;
                s.pct_diff_max = pd.max;
                s.pct_diff_excluded = pd.excluded;
            }
        }
        if let Ok(ks) = ks_two_sample(measured, model) {
            s.ks_d = Some(ks.d);
            s.ks_p = Some(ks.p);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionStats {
    pub left: StatBlock,
    pub central: StatBlock,
    pub right: StatBlock,
    pub total: StatBlock,
}

/// Region means; `None` for empty regions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoiMeans {
    pub left: Option<f64>,
    pub central: Option<f64>,
    pub right: Option<f64>,
    pub total: Option<f64>,
}

impl RoiMeans {
    pub fn get(&self, region: Option<Region>) -> Option<f64> {
        match region {
            Some(Region::Left) => self.left,
            Some(Region::Central) => self.central,
            Some(Region::Right) => self.right,
            None => self.total,
        }
    }

    fn from_samples(samples: &[(Region, f64, f64)]) -> RoiMeans {
        let avg = |filter: Option<Region>| {
            let (mut ws, mut acc) = (0.0, 0.0);
            for &(r, v, w) in samples {
                if filter.is_none_or(|f| f == r) {
                    ws += w;
                    acc += v * w;
                }
            }
            (ws > 0.0).then(|| acc / ws)
        };
        RoiMeans {
            left: avg(Some(Region::Left)),
            central: avg(Some(Region::Central)),
            right: avg(Some(Region::Right)),
            total: avg(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoiAverages {
    pub eps_max: RoiMeans,
    pub eps_min: RoiMeans,
}

/// Per-region means of the principal strains (same units as the field).
///
/// `weights`, when given, holds one weight per triangle (e.g. its area).
pub fn roi_average(field: &SurfaceStrainField, rois: &RoIPartition, weights: Option<&[f64]>) -> Result<RoiAverages> {
    roi_average_subset(field, rois, weights, |_| true)
}

fn roi_average_subset(
    field: &SurfaceStrainField,
    rois: &RoIPartition,
    weights: Option<&[f64]>,
    keep: impl Fn(usize) -> bool,
) -> Result<RoiAverages> {
    if rois.assignment.len() != field.len() || weights.is_some_and(|w| w.len() != field.len()) {
        return Err(Error::InvalidInput("strain field, partition and weights differ in length".into()));
    }
    let (mut mx, mut mn) = (Vec::new(), Vec::new());
    for (i, t) in field.valid().filter(|(i, _)| keep(*i)) {
        let w = weights.map_or(1.0, |w| w[i]);
        mx.push((rois.region(i), t.eps_max, w));
        mn.push((rois.region(i), t.eps_min, w));
    }
    Ok(RoiAverages {
        eps_max: RoiMeans::from_samples(&mx),
        eps_min: RoiMeans::from_samples(&mn),
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DisplacementStats {
    pub ux: StatBlock,
    pub uy: StatBlock,
    pub uz: StatBlock,
    /// All three components stacked into one sample.
    pub pooled: StatBlock,
}

/// Strain statistics in microstrain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrainStats {
    pub stats: RegionStats,
    pub measured_mean_ue: RoiMeans,
    pub model_mean_ue: RoiMeans,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartReport {
    pub part: String,
    pub displacement: DisplacementStats,
    pub eps_max: StrainStats,
    pub eps_min: StrainStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CompareCounts {
    pub queries: usize,
    pub compared: usize,
    pub missing: usize,
    pub triangles: usize,
    pub triangles_compared: usize,
    pub triangles_missing: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub counts: CompareCounts,
    /// Pooled over the whole surface first (`part = "all"`), then per part.
    pub parts: Vec<PartReport>,
}

impl ComparisonReport {
    pub fn part(&self, name: &str) -> Option<&PartReport> {
        self.parts.iter().find(|p| p.part == name)
    }
}

fn displacement_stats(model: &[Vec3], measured: &[Vec3]) -> DisplacementStats {
    let comp = |a: usize| {
        let m: Vec<f64> = model.iter().map(|v| v[a]).collect();
        let d: Vec<f64> = measured.iter().map(|v| v[a]).collect();
        StatBlock::compute(&m, &d, None)
    };
    let pooled_m: Vec<f64> = (0..3).flat_map(|a| model.iter().map(move |v| v[a])).collect();
    let pooled_d: Vec<f64> = (0..3).flat_map(|a| measured.iter().map(move |v| v[a])).collect();
    DisplacementStats {
        ux: comp(0),
        uy: comp(1),
        uz: comp(2),
        pooled: StatBlock::compute(&pooled_m, &pooled_d, None),
    }
}

fn strain_stats(
    samples: &[(Region, f64, f64, f64)],
    floor_ue: f64,
) -> StrainStats {
    let block = |filter: Option<Region>| {
        let (m, d): (Vec<f64>, Vec<f64>) = samples
            .iter()
            .filter(|s| filter.is_none_or(|f| f == s.0))
            .map(|s| (s.1, s.2))
            .unzip();
        StatBlock::compute(&m, &d, Some(floor_ue))
    };
    let model: Vec<(Region, f64, f64)> = samples.iter().map(|s| (s.0, s.1, s.3)).collect();
    let measured: Vec<(Region, f64, f64)> = samples.iter().map(|s| (s.0, s.2, s.3)).collect();
    StrainStats {
        stats: RegionStats {
            left: block(Some(Region::Left)),
            central: block(Some(Region::Central)),
            right: block(Some(Region::Right)),
            total: block(None),
        },
        measured_mean_ue: RoiMeans::from_samples(&measured),
        model_mean_ue: RoiMeans::from_samples(&model),
    }
}

/// Resamples measured displacements onto the surface nodes and compares
/// displacements and both principal strains against the model.
pub fn compare_fields(
    cloud: &MeasurementCloud,
    surface: &SurfaceMesh,
    model: &DisplacementField,
    rois: &RoIPartition,
    cfg: &CompareConfig,
) -> Result<ComparisonReport> {
    let (pts, vals) = cloud.valid_parts();
    let verts = surface.vertices();
    if let Some(&n) = verts.iter().find(|&&n| n >= model.len()) {
        return Err(Error::NodeOutOfRange {
            index: n,
            count: model.len(),
        });
    }
    let measured = idw_interpolate(&pts, &vals, surface.vertex_positions(), &cfg.idw)?;
    let compared = measured.iter().filter(|m| m.is_some()).count();
    if compared < MIN_COMPARED_POINTS {
        return Err(Error::InsufficientData(format!(
            "only {compared} surface nodes have measurements within {} mm (need {MIN_COMPARED_POINTS})",
            cfg.idw.radius_mm
        )));
    }
    let lookup = |n: usize| verts.binary_search(&n).ok().and_then(|i| measured[i]);
    let model_field = surface_strain_field(surface, |n| Some(model.get(n)), rois)?;
    let measured_field = surface_strain_field(surface, lookup, rois)?;
    let both: Vec<bool> = (0..surface.len())
        .map(|t| model_field.triangles[t].is_some() && measured_field.triangles[t].is_some())
        .collect();
    let triangles_compared = both.iter().filter(|&&b| b).count();

    let weights: Vec<f64> = if cfg.area_weighted_roi {
        (0..surface.len()).map(|t| surface.area(t)).collect()
    } else {
        vec![1.0; surface.len()]
    };

    let mut groups: Vec<(String, Option<u32>)> = vec![("all".to_string(), None)];
    groups.extend(surface.part_names().iter().map(|(&id, name)| (name.clone(), Some(id))));

    let parts = groups
        .into_iter()
        .map(|(name, part)| {
            let in_part = |t: usize| part.is_none_or(|p| surface.triangles()[t].part == p);
            let nodes: BTreeSet<usize> = (0..surface.len())
                .filter(|&t| in_part(t))
                .flat_map(|t| surface.triangles()[t].nodes)
                .collect();
            let (dm, dd): (Vec<Vec3>, Vec<Vec3>) = nodes
                .iter()
                .filter_map(|&n| lookup(n).map(|m| (model.get(n), m)))
                .unzip();

            let mut smax = Vec::new();
            let mut smin = Vec::new();
            for t in (0..surface.len()).filter(|&t| both[t] && in_part(t)) {
                let m = model_field.triangles[t].as_ref().unwrap();
                let d = measured_field.triangles[t].as_ref().unwrap();
                let r = rois.region(t);
                smax.push((r, m.eps_max * 1e6, d.eps_max * 1e6, weights[t]));
                smin.push((r, m.eps_min * 1e6, d.eps_min * 1e6, weights[t]));
            }
            PartReport {
                part: name,
                displacement: displacement_stats(&dm, &dd),
                eps_max: strain_stats(&smax, cfg.pct_floor_ue),
                eps_min: strain_stats(&smin, cfg.pct_floor_ue),
            }
        })
        .collect();

    Ok(ComparisonReport {
        counts: CompareCounts {
            queries: verts.len(),
            compared,
            missing: verts.len() - compared,
            triangles: surface.len(),
            triangles_compared,
            triangles_missing: surface.len() - triangles_compared,
        },
        parts,
    })
}
