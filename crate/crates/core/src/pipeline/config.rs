use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fe::PcgOptions;
use crate::material::{CalibrationLaw, DensityElasticityLaw};
use crate::mesh::PhantomSpec;
use crate::metrics::CompareConfig;
use crate::quadrature::TetRule;
use crate::{Error, Result, Vec3};

use super::synth::{SyntheticCtSpec, SyntheticMeasurementSpec};

/// Default sweep of disc moduli, MPa.
pub const DEFAULT_E_DISC_MPA: [f64; 6] = [4.15, 10.0, 25.0, 30.0, 35.0, 50.0];

/// Driven motion used when no marker file is given: a flexion rotation
/// about the lateral axis through the phantom load point, then an axial
/// shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadingSpec {
    /// Positive bends the anterior side down.
    pub flexion_deg: f64,
    /// Positive compresses.
    pub axial_mm: f64,
}

impl Default for LoadingSpec {
    fn default() -> Self {
        LoadingSpec {
            flexion_deg: 2.8,
            axial_mm: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiSettings {
    pub axis: [f64; 3],
    pub fractions: (f64, f64),
}

impl Default for RoiSettings {
    fn default() -> Self {
        RoiSettings {
            axis: [1.0, 0.0, 0.0],
            fractions: (1.0 / 3.0, 2.0 / 3.0),
        }
    }
}

impl RoiSettings {
    pub fn axis(&self) -> Vec3 {
        Vec3::from(self.axis)
    }
}

/// Synthetic measurement generated from a solve at a reference disc
/// modulus, standing in for a recorded cloud. The sampling seed is taken
/// from the config seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceMeasurement {
    pub e_disc_mpa: f64,
    pub sampling: SyntheticMeasurementSpec,
}

impl Default for ReferenceMeasurement {
    fn default() -> Self {
        ReferenceMeasurement {
            e_disc_mpa: 4.15,
            sampling: SyntheticMeasurementSpec::default(),
        }
    }
}

/// One JSON document; every dimensional key carries its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Tet10 mesh file; the phantom below is built when absent.
    pub mesh_path: Option<PathBuf>,
    pub phantom: PhantomSpec,
    /// Voxel grid header; a synthetic CT of the phantom is used when absent.
    pub voxel_grid_path: Option<PathBuf>,
    pub synthetic_ct: SyntheticCtSpec,
    /// Marker CSV giving the driven motion; `loading` is used when absent.
    pub markers_path: Option<PathBuf>,
    pub loading: LoadingSpec,
    /// Measured displacement cloud in the model frame.
    pub measurement_path: Option<PathBuf>,
    /// Generates the measurement when no cloud file is given.
    pub synthetic_measurement: Option<ReferenceMeasurement>,
    /// Rigidly register the measurement cloud onto the model surface first.
    pub align_measurement: bool,
    pub output_dir: PathBuf,

    pub calibration: CalibrationLaw,
    pub density_elasticity: DensityElasticityLaw,
    pub mapping_rule: TetRule,
    pub stiffness_rule: TetRule,

    pub e_disc_mpa: Vec<f64>,
    pub nu_disc: f64,
    pub e_pot_mpa: f64,
    pub nu_pot: f64,
    pub nu_bone: f64,
    /// Parts held fixed and driven by the rigid motion (all exterior nodes).
    pub fixed_part: String,
    pub driven_part: String,

    pub solver: PcgOptions,
    pub compare: CompareConfig,
    pub roi: RoiSettings,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mesh_path: None,
            phantom: PhantomSpec::default(),
            voxel_grid_path: None,
            synthetic_ct: SyntheticCtSpec::default(),
            markers_path: None,
            loading: LoadingSpec::default(),
            measurement_path: None,
            synthetic_measurement: None,
            align_measurement: false,
            output_dir: PathBuf::from("out"),
            calibration: CalibrationLaw::default(),
            density_elasticity: DensityElasticityLaw::default(),
            mapping_rule: TetRule::ElevenPoint,
            stiffness_rule: TetRule::ElevenPoint,
            e_disc_mpa: DEFAULT_E_DISC_MPA.to_vec(),
            nu_disc: 0.1,
            e_pot_mpa: 3000.0,
            nu_pot: 0.3,
            nu_bone: 0.3,
            fixed_part: "pot_inferior".into(),
            driven_part: "pot_superior".into(),
            solver: PcgOptions::default(),
            compare: CompareConfig::default(),
            roi: RoiSettings::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Reads a config; relative paths inside it resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.mesh_path,
            &mut cfg.voxel_grid_path,
            &mut cfg.markers_path,
            &mut cfg.measurement_path,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_disc_mpa.is_empty() {
            return Err(Error::InvalidInput("e_disc_mpa list is empty".into()));
        }
        if let Some(e) = self.e_disc_mpa.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidInput(format!("disc modulus must be positive, got {e}")));
        }
        for (name, nu) in [("nu_disc", self.nu_disc), ("nu_pot", self.nu_pot), ("nu_bone", self.nu_bone)] {
            if !(-1.0 < nu && nu < 0.5) {
                return Err(Error::InvalidInput(format!("{name} = {nu} outside (-1, 0.5)")));
            }
        }
        if !(self.e_pot_mpa > 0.0 && self.e_pot_mpa.is_finite()) {
            return Err(Error::InvalidInput(format!("e_pot_mpa must be positive, got {}", self.e_pot_mpa)));
        }
        if !self.loading.flexion_deg.is_finite() || !self.loading.axial_mm.is_finite() {
            return Err(Error::InvalidInput("loading must be finite".into()));
        }
        let (f1, f2) = self.roi.fractions;
        if !(0.0 < f1 && f1 < f2 && f2 < 1.0) {
            return Err(Error::InvalidInput(format!("roi fractions ({f1}, {f2}) must satisfy 0 < f1 < f2 < 1")));
        }
        if !(self.roi.axis().norm() > 0.0) {
            return Err(Error::InvalidInput("roi axis is zero".into()));
        }
        if self.mesh_path.is_none() {
            self.phantom.validate()?;
        }
        self.calibration.validate()?;
        self.density_elasticity.validate()?;
        self.compare.idw.validate()?;
        if let Some(m) = &self.synthetic_measurement {
            m.sampling.validate()?;
            if !(m.e_disc_mpa > 0.0) {
                return Err(Error::InvalidInput("reference disc modulus must be positive".into()));
            }
        }
        for p in [&self.mesh_path, &self.voxel_grid_path, &self.markers_path, &self.measurement_path]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::InvalidInput(format!("path {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Disc moduli in ascending order.
    pub fn sorted_e_disc(&self) -> Vec<f64> {
        let mut e = self.e_disc_mpa.clone();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }
}
