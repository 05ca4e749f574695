//! End-to-end orchestration: model preparation, disc-modulus sweeps,
//! synthetic measurements and report files.

mod config;
mod report;
mod sweep;
mod synth;

pub use config::{LoadingSpec, PipelineConfig, ReferenceMeasurement, RoiSettings, DEFAULT_E_DISC_MPA};
pub use report::{emit_reports, format_curve_csv, format_overview_csv, format_summary_csv, write_materials, SUMMARY_HEADER};
pub use sweep::{
    exterior_nodes, fit_disc, phantom_motion, run_sweep, sweep_model, Model, Solution, StrainSummary, SweepEntry,
    SweepResult,
};
pub use synth::{synth_measurement, synthetic_ct, Lesion, SyntheticCtSpec, SyntheticMeasurementSpec};
