//! Resampling of measured point clouds and agreement statistics.

mod compare;
mod idw;
mod stats;

pub use compare::{
    compare_fields, roi_average, CompareConfig, CompareCounts, ComparisonReport, DisplacementStats, PartReport,
    RegionStats, RoiAverages, RoiMeans, StatBlock, StrainStats, MIN_COMPARED_POINTS,
};
pub use idw::{idw_interpolate, read_cloud, write_cloud, IdwOptions, MeasurementCloud, EXACT_HIT_MM};
pub use stats::{
    kolmogorov_sf, ks_two_sample, linear_regression, mean, pearson, percent_difference, rmse_pct, KsResult,
    PercentDifference, Regression,
};
