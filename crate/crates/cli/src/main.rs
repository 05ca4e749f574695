use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use spinefe::fe::{read_displacements, write_displacements, FitOptions};
use spinefe::material::{map_materials, read_voxel_grid, write_voxel_grid};
use spinefe::mesh::{build_phantom, read_mesh, write_mesh};
use spinefe::metrics::{compare_fields, read_cloud, write_cloud};
use spinefe::pipeline::{
    emit_reports, fit_disc, run_sweep, synth_measurement, synthetic_ct, write_materials, Model, PipelineConfig,
    SweepResult, SyntheticMeasurementSpec,
};
use spinefe::strain::write_strain_csv;
use spinefe::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "spinefe", version, about = "Multi-vertebra FE models validated against surface displacement clouds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Pipeline config (JSON); defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the phantom mesh and its synthetic CT
    Phantom,
    /// Map CT-derived moduli onto the vertebra elements
    Map,
    /// Solve at one disc modulus
    Solve {
        /// Disc modulus in MPa (default: smallest configured value)
        #[arg(long)]
        e_disc: Option<f64>,
    },
    /// Solve across the configured disc moduli and write all reports
    Sweep,
    /// Find the disc modulus that reproduces a reaction force
    FitDisc {
        /// Target reaction-force magnitude in N
        #[arg(long)]
        target_force: f64,
        /// Disc modulus bracket in MPa
        #[arg(long, num_args = 2, required = true, value_names = ["LO", "HI"])]
        bracket: Vec<f64>,
        #[arg(long, default_value_t = FitOptions::default().tol_rel)]
        tol_rel: f64,
        #[arg(long, default_value_t = FitOptions::default().max_evaluations)]
        max_evals: usize,
    },
    /// Generate a synthetic displacement cloud from a solve
    SynthDic {
        /// Sampling spacing in mm
        #[arg(long, default_value_t = 2.0)]
        spacing: f64,
        /// Random error standard deviation in µm
        #[arg(long, default_value_t = 25.0)]
        rand_um: f64,
        /// Systematic error magnitude in µm
        #[arg(long, default_value_t = 10.0)]
        sys_um: f64,
        #[arg(long)]
        e_disc: Option<f64>,
    },
    /// Compare a measured cloud against a model solution
    Compare {
        /// Measured cloud CSV `x,y,z,ux,uy,uz`
        #[arg(long)]
        measurement: PathBuf,
        /// Model displacements CSV; solved at --e-disc when omitted
        #[arg(long)]
        displacements: Option<PathBuf>,
        #[arg(long)]
        e_disc: Option<f64>,
    },
    /// Rewrite the CSV and JSON reports from a saved sweep result
    Report {
        #[arg(long)]
        result: PathBuf,
    },
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn e_or_first(cfg: &PipelineConfig, e: Option<f64>) -> Result<f64> {
    cfg.validate()?;
    Ok(e.unwrap_or_else(|| cfg.sorted_e_disc()[0]))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let out = cfg.output_dir.clone();
    ensure_dir(&out)?;
    match cli.command {
        Command::Phantom => {
            let mesh = build_phantom(&cfg.phantom)?;
            write_mesh(&mesh, &out.join("phantom_mesh.txt"))?;
            write_voxel_grid(&synthetic_ct(&cfg.phantom, &cfg.synthetic_ct)?, &out.join("phantom_ct.json"))?;
            println!("{} nodes, {} elements", mesh.num_nodes(), mesh.num_elements());
        }
        Command::Map => {
            let mesh = match &cfg.mesh_path {
                Some(p) => read_mesh(p)?,
                None => build_phantom(&cfg.phantom)?,
            };
            let grid = match &cfg.voxel_grid_path {
                Some(p) => read_voxel_grid(p)?,
                None => synthetic_ct(&cfg.phantom, &cfg.synthetic_ct)?,
            };
            let field = map_materials(&mesh, &grid, &cfg.calibration, &cfg.density_elasticity, cfg.mapping_rule, cfg.nu_bone)?;
            write_materials(&mesh, &field, &out.join("materials.csv"))?;
            let mapped = field.entries().iter().flatten().count();
            println!("{mapped} vertebra elements mapped");
        }
        Command::Solve { e_disc } => {
            let e = e_or_first(&cfg, e_disc)?;
            let model = Model::prepare(&cfg)?;
            let sol = model.solve(e)?;
            write_displacements(&model.mesh, &sol.displacement, &out.join("displacements.csv"))?;
            write_strain_csv(&sol.strain, &out.join("strains.csv"))?;
            spinefe::vtk::write_volume(&model.mesh, Some(&sol.displacement), &out.join("volume.vtk"))?;
            spinefe::vtk::write_surface(&model.surface, &sol.strain, &out.join("surface.vtk"))?;
            let summary = serde_json::json!({
                "e_disc_mpa": e,
                "reaction_n": sol.reaction_n,
                "reaction_magnitude_n": sol.reaction_n.norm(),
                "solve": sol.stats,
                "strain": spinefe::pipeline::StrainSummary::from_field(&sol.strain, &model.rois)?,
            });
            write_json(&summary, &out.join("solution.json"))?;
            println!("E_disc {e} MPa: |R| = {} N ({} iterations)", sol.reaction_n.norm(), sol.stats.iterations);
        }
        Command::Sweep => {
            let result = run_sweep(&cfg)?;
            let files = emit_reports(&result, &out)?;
            for e in &result.entries {
                match (&e.error, e.reaction_magnitude_n) {
                    (Some((cat, msg)), _) => println!("E_disc {} MPa: failed [{cat}] {msg}", e.e_disc_mpa),
                    (None, Some(r)) => println!("E_disc {} MPa: |R| = {r} N", e.e_disc_mpa),
                    _ => {}
                }
            }
            info!("wrote {} files to {}", files.len(), out.display());
            if result.num_failed() == result.entries.len() {
                let (cat, msg) = result.entries[0].error.clone().unwrap_or_default();
                return Err(Error::InvalidInput(format!("every sweep entry failed; first: [{cat}] {msg}")));
            }
        }
        Command::FitDisc {
            target_force,
            bracket,
            tol_rel,
            max_evals,
        } => {
            let model = Model::prepare(&cfg)?;
            let opts = FitOptions {
                tol_rel,
                max_evaluations: max_evals,
            };
            let fit = fit_disc(&model, target_force, (bracket[0], bracket[1]), &opts)?;
            write_json(&fit, &out.join("fit_disc.json"))?;
            println!(
                "E_disc = {} MPa (|R| = {} N after {} solves)",
                fit.e_disc_mpa, fit.force_n, fit.evaluations
            );
        }
        Command::SynthDic {
            spacing,
            rand_um,
            sys_um,
            e_disc,
        } => {
            let e = e_or_first(&cfg, e_disc)?;
            let model = Model::prepare(&cfg)?;
            let sol = model.solve(e)?;
            let spec = SyntheticMeasurementSpec {
                spacing_mm: spacing,
                systematic_mm: sys_um * 1e-3,
                random_std_mm: rand_um * 1e-3,
                seed: cfg.seed,
                ..SyntheticMeasurementSpec::default()
            };
            let cloud = synth_measurement(&model.surface, &sol.displacement, &spec)?;
            write_cloud(&cloud, &out.join("synthetic_dic.csv"))?;
            println!("{} samples", cloud.len());
        }
        Command::Compare {
            measurement,
            displacements,
            e_disc,
        } => {
            let model = Model::prepare(&cfg)?;
            let u = match displacements {
                Some(p) => {
                    let (_, u) = read_displacements(&p)?;
                    if u.len() != model.mesh.num_nodes() {
                        return Err(Error::InvalidInput(format!(
                            "displacement file has {} nodes, model has {}",
                            u.len(),
                            model.mesh.num_nodes()
                        )));
                    }
                    u
                }
                None => model.solve(e_or_first(&cfg, e_disc)?)?.displacement,
            };
            let cloud = read_cloud(&measurement)?;
            let report = compare_fields(&cloud, &model.surface, &u, &model.rois, &cfg.compare)?;
            write_json(&report, &out.join("comparison.json"))?;
            let all = report.part("all").expect("pooled part is always present");
            println!(
                "compared {}/{} nodes; displacement %RMSE {:.3}, eps_min R2 {:.4}, eps_max R2 {:.4}",
                report.counts.compared,
                report.counts.queries,
                all.displacement.pooled.rmse_pct.unwrap_or(f64::NAN),
                all.eps_min.stats.total.r2.unwrap_or(f64::NAN),
                all.eps_max.stats.total.r2.unwrap_or(f64::NAN),
            );
        }
        Command::Report { result } => {
            let text = std::fs::read_to_string(&result).map_err(|e| Error::Io {
                path: result.clone(),
                source: e,
            })?;
            let parsed: SweepResult = serde_json::from_str(&text)?;
            let files = emit_reports(&parsed, &out)?;
            println!("wrote {} files", files.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[invalid-input]: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
