use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{SweepEntry, SweepResult};
use crate::material::{MaterialField, Provenance};
use crate::mesh::Mesh;
use crate::metrics::{StatBlock, StrainStats};
use crate::{Error, Result};

pub const SUMMARY_HEADER: &str = "statistic,e_disc_mpa,part,quantity,left,central,right,total";

const STATISTICS: [&str; 3] = ["rmse_ue", "rmse_pct", "r2"];
const QUANTITIES: [&str; 2] = ["eps_min", "eps_max"];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn pick(b: &StatBlock, statistic: &str) -> Option<f64> {
    match statistic {
        "rmse_ue" => b.rmse,
        "rmse_pct" => b.rmse_pct,
        _ => b.r2,
    }
}

fn strain_stats<'a>(entry: &'a SweepEntry, part: &str, quantity: &str) -> Option<&'a StrainStats> {
    let p = entry.comparison.as_ref()?.part(part)?;
    Some(if quantity == "eps_min" { &p.eps_min } else { &p.eps_max })
}

/// Part names in report order: the pooled `all` first.
fn part_names(result: &SweepResult) -> Vec<String> {
    result
        .entries
        .iter()
        .find_map(|e| e.comparison.as_ref())
        .map(|c| c.parts.iter().map(|p| p.part.clone()).collect())
        .unwrap_or_else(|| vec!["all".to_string()])
}

/// Rows grouped by statistic, part and quantity, one row per entry in
/// each group. Cells are empty where no comparison exists.
pub fn format_summary_csv(result: &SweepResult) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for statistic in STATISTICS {
        for part in part_names(result) {
            for quantity in QUANTITIES {
                for e in &result.entries {
                    let s = strain_stats(e, &part, quantity);
                    let v = |f: fn(&StrainStats) -> &StatBlock| cell(s.and_then(|s| pick(f(s), statistic)));
                    let _ = writeln!(
                        out,
                        "{statistic},{},{part},{quantity},{},{},{},{}",
                        e.e_disc_mpa,
                        v(|s| &s.stats.left),
                        v(|s| &s.stats.central),
                        v(|s| &s.stats.right),
                        v(|s| &s.stats.total),
                    );
                }
            }
        }
    }
    out
}

/// Strain %RMSE against disc modulus per region, pooled over all parts.
pub fn format_curve_csv(result: &SweepResult) -> String {
    let mut out = String::from("e_disc_mpa");
    for q in QUANTITIES {
        for r in ["left", "central", "right", "total"] {
            let _ = write!(out, ",{q}_{r}");
        }
    }
    out.push('\n');
    for e in &result.entries {
        let _ = write!(out, "{}", e.e_disc_mpa);
        for q in QUANTITIES {
            let s = strain_stats(e, "all", q);
            for f in [
                |s: &StrainStats| s.stats.left.rmse_pct,
                |s: &StrainStats| s.stats.central.rmse_pct,
                |s: &StrainStats| s.stats.right.rmse_pct,
                |s: &StrainStats| s.stats.total.rmse_pct,
            ] {
                let _ = write!(out, ",{}", cell(s.and_then(f)));
            }
        }
        out.push('\n');
    }
    out
}

/// Reaction, solver and mean-strain figures per entry.
pub fn format_overview_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "e_disc_mpa,status,reaction_x_n,reaction_y_n,reaction_z_n,reaction_n,iterations,mean_eps_max_ue,mean_abs_eps_min_ue\n",
    );
    for e in &result.entries {
        let r = e.reaction_n;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.e_disc_mpa,
            e.error.as_ref().map_or("ok", |(c, _)| c.as_str()),
            cell(r.map(|r| r.x)),
            cell(r.map(|r| r.y)),
            cell(r.map(|r| r.z)),
            cell(e.reaction_magnitude_n),
            e.solve.map_or_else(String::new, |s| s.iterations.to_string()),
            cell(e.strain.as_ref().map(|s| s.mean_eps_max_ue)),
            cell(e.strain.as_ref().map(|s| s.mean_abs_eps_min_ue)),
        );
    }
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the summary, curve and overview CSVs, the full result and one
/// report per entry as JSON, and VTK files for entries that carry fields.
/// Returns the paths written, in order.
pub fn emit_reports(result: &SweepResult, outdir: &Path) -> Result<Vec<PathBuf>> {
    if result.entries.is_empty() {
        return Err(Error::InvalidInput("sweep result has no entries".into()));
    }
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut written = Vec::new();
    write(outdir.join("summary.csv"), &format_summary_csv(result), &mut written)?;
    write(outdir.join("rmse_pct_curve.csv"), &format_curve_csv(result), &mut written)?;
    write(outdir.join("sweep_overview.csv"), &format_overview_csv(result), &mut written)?;
    write(
        outdir.join("sweep_result.json"),
        &(serde_json::to_string_pretty(result)? + "\n"),
        &mut written,
    )?;
    for (i, e) in result.entries.iter().enumerate() {
        write(
            outdir.join(format!("entry_{i:02}.json")),
            &(serde_json::to_string_pretty(e)? + "\n"),
            &mut written,
        )?;
    }
    if let Some(model) = &result.model {
        for (i, e) in result.entries.iter().enumerate() {
            if let Some(fields) = &e.fields {
                let (u, strain) = &**fields;
                write(
                    outdir.join(format!("volume_{i:02}.vtk")),
                    &crate::vtk::format_volume(&model.mesh, Some(u))?,
                    &mut written,
                )?;
                write(
                    outdir.join(format!("surface_{i:02}.vtk")),
                    &crate::vtk::format_surface(&model.surface, strain)?,
                    &mut written,
                )?;
            }
        }
    }
    Ok(written)
}

/// CSV `element,part,e_mpa,nu,provenance`; unassigned elements are left
/// blank.
pub fn write_materials(mesh: &Mesh, field: &MaterialField, path: &Path) -> Result<()> {
    if field.len() != mesh.num_elements() {
        return Err(Error::InvalidInput("material field does not match the mesh".into()));
    }
    let mut out = String::from("element,part,e_mpa,nu,provenance\n");
    for (e, m) in field.entries().iter().enumerate() {
        let part = &mesh.parts()[&mesh.element_part(e)].name;
        match m {
            Some(m) => {
                let prov = match m.provenance {
                    Provenance::Mapped => "MAPPED",
                    Provenance::Uniform => "UNIFORM",
                };
                let _ = writeln!(out, "{e},{part},{},{},{prov}", m.e_mpa, m.nu);
            }
            None => {
                let _ = writeln!(out, "{e},{part},,,");
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::super::{run_sweep, PipelineConfig, ReferenceMeasurement, SyntheticMeasurementSpec};
    use super::*;
    use crate::mesh::PhantomSpec;

    fn cfg() -> PipelineConfig {
        PipelineConfig {
            phantom: PhantomSpec::small(),
            e_disc_mpa: vec![4.15, 10.0, 25.0],
            synthetic_measurement: Some(ReferenceMeasurement {
                e_disc_mpa: 10.0,
                sampling: SyntheticMeasurementSpec::default(),
            }),
            seed: 4,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn summary_schema() {
        let r = run_sweep(&cfg()).unwrap();
        let text = format_summary_csv(&r);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SUMMARY_HEADER));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        // 3 statistics × (all + 2 vertebrae) × 2 quantities × 3 entries
        assert_eq!(rows.len(), 3 * 3 * 2 * 3);
        assert!(rows.iter().all(|r| r.len() == 8));
        for block in rows.chunks(3) {
            let es: Vec<&str> = block.iter().map(|r| r[1]).collect();
            assert_eq!(es, vec!["4.15", "10", "25"]);
            assert!(block.iter().all(|r| r[0] == block[0][0] && r[2] == block[0][2] && r[3] == block[0][3]));
        }
        assert!(rows.iter().all(|r| r[7].parse::<f64>().is_ok()));
    }

    #[test]
    fn curve_schema() {
        let r = run_sweep(&cfg()).unwrap();
        let text = format_curve_csv(&r);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "e_disc_mpa,eps_min_left,eps_min_central,eps_min_right,eps_min_total,eps_max_left,eps_max_central,eps_max_right,eps_max_total"
        );
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn reports_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_reports(&run_sweep(&cfg()).unwrap(), a.path()).unwrap();
        let fb = emit_reports(&run_sweep(&cfg()).unwrap(), b.path()).unwrap();
        assert_eq!(fa.len(), 4 + 3 + 6);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
        }
    }

    #[test]
    fn result_json_round_trips() {
        let r = run_sweep(&cfg()).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: SweepResult = serde_json::from_str(&json).unwrap();
        assert_eq!(format_summary_csv(&back), format_summary_csv(&r));
        assert_eq!(format_curve_csv(&back), format_curve_csv(&r));
    }

    #[test]
    fn empty_result_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_reports(&SweepResult::default(), dir.path()).is_err());
    }
}
