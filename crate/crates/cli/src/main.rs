//! `tsr` — tie-line security regions for multi-area DC networks.
//!
//! Subcommands cover the full flow: `compute-region` publishes one
//! region's artifact, `coordinate` runs the one-shot coordination LP over
//! published artifacts and recovers dispatch, `check` samples a region
//! artifact for feasibility, `report` exports 2-D plot data, `oracle`
//! exposes the independent ground-truth machinery, and `pipeline` runs
//! everything on one case.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage error. Thread count
//! follows `RAYON_NUM_THREADS`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tsr_core::coordination::{
    recover_regional_dispatch, run_pipeline, solve_coordination, PipelineOptions, PipelineReport,
    RegionBundle, StageTimings,
};
use tsr_core::io::artifact::{slice_csv, write_report, ArtifactOptions, RegionArtifact};
use tsr_core::io::{parse_case, CaseFile};
use tsr_core::lp::regional::build_all_matrices;
use tsr_core::oracles::{
    fourier_motzkin_project, minmax_bruteforce, sample_and_check, solve_centralized_op1,
    IneqSystem,
};
use tsr_core::par::Parallelism;
use tsr_core::projection::{RegionOptions, SecurityRegion};

#[derive(Parser)]
#[command(name = "tsr", version, about = "Tie-line security regions for multi-area DC networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CaseArg {
    /// Case file (JSON).
    #[arg(long)]
    case: PathBuf,
    /// Apply a named scenario's profile overrides before computing.
    #[arg(long)]
    scenario: Option<String>,
}

impl CaseArg {
    fn load(&self) -> tsr_core::Result<CaseFile> {
        let case = parse_case(&self.case)?;
        match &self.scenario {
            Some(name) => case.apply_scenario(name),
            None => Ok(case),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute one region's artifact: envelope, aggregation, per-period
    /// security regions with witnesses.
    ComputeRegion {
        #[command(flatten)]
        case: CaseArg,
        /// Region id to compute.
        #[arg(long)]
        region: String,
        /// Output artifact path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Relative volume-change stopping threshold.
        #[arg(long, default_value_t = 1e-3)]
        volume_tol: f64,
        /// Maximum vertex-search sweeps.
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        /// Disable data-parallel LP batches.
        #[arg(long)]
        sequential: bool,
    },
    /// Coordinate all regions over previously computed artifacts and
    /// recover each region's dispatch.
    Coordinate {
        #[command(flatten)]
        case: CaseArg,
        /// Directory containing one artifact JSON per region.
        #[arg(long)]
        artifacts: PathBuf,
        /// Output report path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a region artifact and count feasible points against the
    /// full original constraints.
    Check {
        /// Artifact path (JSON).
        #[arg(long)]
        artifact: PathBuf,
        #[command(flatten)]
        case: CaseArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
    /// Export 2-D plot data (CSV) of a region's vertices on two axes.
    Report {
        #[arg(long)]
        artifact: PathBuf,
        /// Two coordinate indices, comma-separated (z is the last axis).
        #[arg(long)]
        slice: String,
        /// Period to slice.
        #[arg(long, default_value_t = 0)]
        period: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent ground-truth oracles.
    Oracle {
        #[command(subcommand)]
        oracle: OracleCommand,
    },
    /// Run the whole flow on one case: per-region artifacts, coordination,
    /// recovery, baselines and sampling counters.
    Pipeline {
        #[command(flatten)]
        case: CaseArg,
        /// Output report path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write per-region artifacts into this directory.
        #[arg(long)]
        artifacts_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        volume_tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        /// Per-region sampling feasibility counter size (0 disables).
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Skip the centralized baseline comparison.
        #[arg(long)]
        no_baseline: bool,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact Fourier-Motzkin projection of an inequality system.
    Fme {
        /// System JSON: {"n_vars": N, "rows": [{"coeffs": [...], "rhs": r}]}.
        #[arg(long)]
        system: PathBuf,
        /// Variable indices to eliminate, comma-separated.
        #[arg(long)]
        eliminate: String,
        /// Output path for the projected system (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form vs brute-force minimax affine fit of a group term.
    Minmax {
        /// Member coefficients, comma-separated.
        #[arg(long)]
        coeffs: String,
        /// Box upper bounds, comma-separated.
        #[arg(long)]
        upper: String,
        /// Box lower bounds (defaults to zeros).
        #[arg(long)]
        lower: Option<String>,
    },
    /// Centralized curtailment-minimization baseline.
    Op1 {
        #[command(flatten)]
        case: CaseArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn parse_list(text: &str, what: &str) -> tsr_core::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                tsr_core::Error::Artifact(format!("invalid {what} entry `{s}`"))
            })
        })
        .collect()
}

fn parse_indices(text: &str, what: &str) -> tsr_core::Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|_| {
                tsr_core::Error::Artifact(format!("invalid {what} entry `{s}`"))
            })
        })
        .collect()
}

fn mode(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Rayon
    }
}

fn load_artifacts_dir(
    dir: &PathBuf,
    case: &CaseFile,
) -> tsr_core::Result<BTreeMap<String, RegionBundle>> {
    let mut bundles = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    entries.sort();
    for path in entries {
        let artifact = RegionArtifact::read(&path)?;
        artifact.check_provenance(case)?;
        bundles.insert(artifact.bundle.region_id.clone(), artifact.bundle);
    }
    if bundles.is_empty() {
        return Err(tsr_core::Error::Artifact(format!(
            "no artifact JSON files found in {}",
            dir.display()
        )));
    }
    Ok(bundles)
}

fn print_sample_table(region_id: &str, report: &tsr_core::oracles::SampleReport) {
    println!("region {region_id}: seed {}, tolerance {:.0e}", report.seed, report.tolerance);
    println!("  {:>12} {:>12} {:>12}", "total", "feasible", "infeasible");
    println!(
        "  {:>12} {:>12} {:>12}",
        report.total, report.feasible, report.infeasible
    );
}

fn run(cli: Cli) -> tsr_core::Result<()> {
    match cli.command {
        Command::ComputeRegion {
            case,
            region,
            out,
            volume_tol,
            max_iters,
            sequential,
        } => {
            let case_file = case.load()?;
            let network = case_file.region(&region)?;
            let mats = build_all_matrices(&case_file)?;
            let opts = RegionOptions {
                volume_tol,
                max_iters,
                mode: mode(sequential),
            };
            let started = std::time::Instant::now();
            let bundle =
                tsr_core::coordination::build_region_bundle(network, &mats[&region], &opts)?;
            let elapsed = started.elapsed().as_secs_f64() * 1e3;
            let artifact = RegionArtifact::new(
                bundle,
                &case_file,
                ArtifactOptions { volume_tol, max_iters },
            );
            artifact.write(&out)?;
            println!(
                "region {region}: {} period(s) in {elapsed:.1} ms -> {}",
                case_file.n_t,
                out.display()
            );
            for (t, p) in artifact.bundle.periods.iter().enumerate() {
                println!(
                    "  t={t}: {} vertices, {} halfspaces, {} sweeps, converged={}",
                    p.region.n_vertices(),
                    p.region.halfspaces.len(),
                    p.region.sweeps,
                    p.region.converged
                );
            }
            Ok(())
        }
        Command::Coordinate { case, artifacts, out } => {
            let case_file = case.load()?;
            let bundles = load_artifacts_dir(&artifacts, &case_file)?;
            let mats = build_all_matrices(&case_file)?;
            let t0 = std::time::Instant::now();
            let coordination = solve_coordination(&case_file, &bundles)?;
            let coordination_ms = t0.elapsed().as_secs_f64() * 1e3;
            let t1 = std::time::Instant::now();
            let mut recovered = Vec::new();
            for (network, rc) in case_file.regions.iter().zip(&coordination.regions) {
                let flows: Vec<Vec<f64>> = rc.periods.iter().map(|p| p.tie_flow.clone()).collect();
                let angles: Vec<Vec<f64>> =
                    rc.periods.iter().map(|p| p.border_angle.clone()).collect();
                recovered.push(recover_regional_dispatch(
                    network,
                    &mats[&network.region_id],
                    &flows,
                    &angles,
                )?);
            }
            let recovery_ms = t1.elapsed().as_secs_f64() * 1e3;
            let islanded = tsr_core::lp::regional::islanded_objective(&case_file, &mats)?;
            let report = PipelineReport {
                objective: coordination.objective,
                islanded_objective: islanded,
                op1_objective: None,
                coordination,
                recovered,
                samples: vec![],
                timings: StageTimings {
                    regions_ms: 0.0,
                    coordination_ms,
                    recovery_ms,
                    sampling_ms: 0.0,
                },
            };
            write_report(&report, &out)?;
            println!(
                "coordinated objective {:.4} MW (no-exchange baseline {:.4} MW) -> {}",
                report.objective,
                report.islanded_objective,
                out.display()
            );
            println!(
                "timings: coordination {:.1} ms, recovery {:.1} ms",
                report.timings.coordination_ms, report.timings.recovery_ms
            );
            Ok(())
        }
        Command::Check {
            artifact,
            case,
            samples,
            seed,
            sequential,
        } => {
            let case_file = case.load()?;
            let artifact = RegionArtifact::read(&artifact)?;
            artifact.check_provenance(&case_file)?;
            let region_id = artifact.bundle.region_id.clone();
            let network = case_file.region(&region_id)?;
            let mats = build_all_matrices(&case_file)?;
            let regions: Vec<SecurityRegion> = artifact
                .bundle
                .periods
                .iter()
                .map(|p| p.region.clone())
                .collect();
            let report = sample_and_check(
                network,
                &mats[&region_id],
                &regions,
                samples,
                seed,
                mode(sequential),
            )?;
            print_sample_table(&region_id, &report);
            if report.infeasible > 0 {
                return Err(tsr_core::Error::Infeasible {
                    context: format!("{} of {} sampled points infeasible", report.infeasible, report.total),
                });
            }
            Ok(())
        }
        Command::Report { artifact, slice, period, out } => {
            let artifact = RegionArtifact::read(&artifact)?;
            let axes = parse_indices(&slice, "slice")?;
            if axes.len() != 2 {
                return Err(tsr_core::Error::Artifact(
                    "--slice takes exactly two comma-separated indices".into(),
                ));
            }
            let bundle = &artifact.bundle;
            let p = bundle.periods.get(period).ok_or_else(|| {
                tsr_core::Error::Artifact(format!(
                    "artifact has {} period(s), no period {period}",
                    bundle.periods.len()
                ))
            })?;
            let csv = slice_csv(&p.region, axes[0], axes[1])?;
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    println!("wrote slice ({}, {}) of period {period} -> {}", axes[0], axes[1], path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Oracle { oracle } => match oracle {
            OracleCommand::Fme { system, eliminate, out } => {
                let text = std::fs::read_to_string(&system)?;
                let sys: IneqSystem = serde_json::from_str(&text)?;
                let eliminate = parse_indices(&eliminate, "eliminate")?;
                let (projected, kept) = fourier_motzkin_project(&sys, &eliminate)?;
                let json = serde_json::to_string_pretty(&projected).expect("serializable");
                match out {
                    Some(path) => {
                        std::fs::write(&path, json + "\n")?;
                        println!(
                            "projected onto variables {kept:?}: {} rows -> {}",
                            projected.rows.len(),
                            path.display()
                        );
                    }
                    None => println!("{json}"),
                }
                Ok(())
            }
            OracleCommand::Minmax { coeffs, upper, lower } => {
                let a = parse_list(&coeffs, "coeffs")?;
                let u = parse_list(&upper, "upper")?;
                let l = match lower {
                    Some(text) => parse_list(&text, "lower")?,
                    None => vec![0.0; a.len()],
                };
                if a.len() != u.len() || a.len() != l.len() {
                    return Err(tsr_core::Error::Artifact(
                        "coeffs, upper and lower must have equal lengths".into(),
                    ));
                }
                let closed = tsr_core::aggregation::minimax_fit(&a, &u, &l);
                let brute = minmax_bruteforce(&a, &u, &l);
                println!("closed form: slope {:.9}, intercept {:.9}, error {:.9}", closed.0, closed.1, closed.2);
                println!("brute force: slope {:.9}, intercept {:.9}, error {:.9}", brute.0, brute.1, brute.2);
                println!("error gap  : {:.3e}", (closed.2 - brute.2).abs());
                Ok(())
            }
            OracleCommand::Op1 { case } => {
                let case_file = case.load()?;
                let (objective, _) = solve_centralized_op1(&case_file)?;
                println!("centralized objective: {objective:.6} MW curtailment");
                Ok(())
            }
        },
        Command::Pipeline {
            case,
            out,
            artifacts_out,
            volume_tol,
            max_iters,
            samples,
            seed,
            no_baseline,
            sequential,
        } => {
            let case_file = case.load()?;
            let opts = PipelineOptions {
                region: RegionOptions {
                    volume_tol,
                    max_iters,
                    mode: mode(sequential),
                },
                samples,
                seed,
                include_op1: !no_baseline,
            };
            let (report, bundles) = run_pipeline(&case_file, &opts)?;
            if let Some(dir) = artifacts_out {
                std::fs::create_dir_all(&dir)?;
                for (region_id, bundle) in bundles {
                    let artifact = RegionArtifact::new(
                        bundle,
                        &case_file,
                        ArtifactOptions { volume_tol, max_iters },
                    );
                    artifact.write(dir.join(format!("{region_id}.json")))?;
                }
            }
            write_report(&report, &out)?;
            println!(
                "coordinated {:.4} MW | no-exchange {:.4} MW{}",
                report.objective,
                report.islanded_objective,
                match report.op1_objective {
                    Some(v) => format!(" | centralized {v:.4} MW"),
                    None => String::new(),
                }
            );
            println!(
                "timings: regions {:.1} ms, coordination {:.1} ms, recovery {:.1} ms, sampling {:.1} ms",
                report.timings.regions_ms,
                report.timings.coordination_ms,
                report.timings.recovery_ms,
                report.timings.sampling_ms
            );
            for s in &report.samples {
                println!(
                    "sampled {}: {} feasible / {} infeasible",
                    s.total, s.feasible, s.infeasible
                );
            }
            println!("report -> {}", out.display());
            Ok(())
        }
    }
}
