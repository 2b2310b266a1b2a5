//! Command-line front end: `sweep` renders scenario CSVs, `validate` runs
//! one of the self-contained validation suites, and `design` emits
//! constructed beamformers as JSON.
//!
//! Exit codes: 0 on success, 2 when the run finished but something failed
//! (skipped sweep cells, a failing suite), 1 on hard errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use statbeam_cli::config::ScenarioConfig;
use statbeam_cli::sweep::{render_csv, run_sweep, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL};
use statbeam_cli::validate::{run_suite, SuiteTag};
use statbeam_core::design::{
    design_common_basis, design_high_snr_m2, design_low_snr, fixed_point_design_restarts,
    grid_search_oracle_m2, DesignResult, GridObjective, DEFAULT_FIXED_POINT_RESTARTS,
    DEFAULT_GRID_PHI_STEPS, DEFAULT_GRID_THETA_STEPS,
};
use statbeam_core::CovarianceMatrix;

#[derive(Parser)]
#[command(
    name = "statbeam",
    version,
    about = "Ergodic sum rates and beamformer designs for spatially correlated broadcast channels"
)]
struct Cli {
    /// Worker threads (default: one per core). Output does not depend on
    /// the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every requested (snr, user, method) cell of a scenario
    /// into a CSV file.
    Sweep {
        /// Scenario JSON document.
        #[arg(long)]
        config: PathBuf,
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one validation suite and report each check's measured value
    /// against its threshold.
    Validate {
        /// One of: closed-form-vs-mc, density-uniform, optimality-oracle,
        /// asymptotic-M, fixed-point.
        #[arg(long)]
        suite: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct beamformers for a scenario with one design method and
    /// write them as JSON.
    Design {
        /// Scenario JSON document; its method list is ignored here.
        #[arg(long)]
        config: PathBuf,
        /// One of: low-snr, high-snr-gev, common-basis, fixed-point,
        /// grid-oracle. Power-dependent methods use the first snr_grid_db
        /// entry.
        #[arg(long)]
        method: String,
        /// Destination JSON path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building the worker pool")?;
    }
    match cli.command {
        Command::Sweep { config, out } => sweep_command(&config, &out),
        Command::Validate { suite, out } => validate_command(&suite, out.as_deref()),
        Command::Design { config, method, out } => design_command(&config, &method, &out),
    }
}

fn read_config(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sweep_command(config_path: &Path, out: &Path) -> anyhow::Result<ExitCode> {
    let config = ScenarioConfig::from_json(&read_config(config_path)?)?;
    let output = run_sweep(&config)?;
    fs::write(out, render_csv(&output)).with_context(|| format!("writing {}", out.display()))?;
    for warning in &output.warnings {
        eprintln!(
            "warning: snr_db={} method={}: {}",
            warning.snr_db, warning.method, warning.detail
        );
    }
    println!(
        "wrote {} rows to {} ({} cells skipped)",
        output.rows.len(),
        out.display(),
        output.warnings.iter().filter(|w| w.skipped).count()
    );
    Ok(if output.is_complete() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn validate_command(suite: &str, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let tag: SuiteTag = suite.parse()?;
    let report = run_suite(tag)?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
            for check in &report.checks {
                println!(
                    "{}: measured {:.6e} vs threshold {:.6e} -> {}",
                    check.name,
                    check.measured,
                    check.threshold,
                    if check.pass { "pass" } else { "FAIL" }
                );
            }
            println!("suite {}: {}", report.suite, if report.pass { "pass" } else { "FAIL" });
        }
        None => println!("{json}"),
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn require_two_users(method: &str, sigmas: &[CovarianceMatrix]) -> anyhow::Result<()> {
    if sigmas.len() != 2 {
        bail!("method `{method}` covers the two-user case, scenario has {} users", sigmas.len());
    }
    Ok(())
}

fn design_command(config_path: &Path, method: &str, out: &Path) -> anyhow::Result<ExitCode> {
    let config = ScenarioConfig::from_json_design(&read_config(config_path)?)?;
    let sigmas = config.build_covariances()?;
    let rho = 10f64.powf(config.snr_grid_db[0] / 10.0);

    let result: DesignResult = match method {
        "low-snr" => design_low_snr(&sigmas)?,
        "high-snr-gev" => {
            require_two_users(method, &sigmas)?;
            design_high_snr_m2(&sigmas[0], &sigmas[1])?
        }
        "common-basis" => {
            require_two_users(method, &sigmas)?;
            design_common_basis(&sigmas[0], &sigmas[1])?
        }
        "fixed-point" => fixed_point_design_restarts(
            &sigmas,
            rho,
            FIXED_POINT_TOL,
            FIXED_POINT_MAX_ITER,
            DEFAULT_FIXED_POINT_RESTARTS,
            config.seed,
        )?,
        "grid-oracle" => {
            require_two_users(method, &sigmas)?;
            grid_search_oracle_m2(
                &sigmas[0],
                &sigmas[1],
                GridObjective::Ergodic { rho },
                DEFAULT_GRID_THETA_STEPS,
                DEFAULT_GRID_PHI_STEPS,
            )?
        }
        other => bail!(
            "unknown design method `{other}`, expected one of: \
             low-snr, high-snr-gev, common-basis, fixed-point, grid-oracle"
        ),
    };

    let beamformers: Vec<serde_json::Value> = result
        .ws
        .iter()
        .map(|w| {
            let re: Vec<f64> = w.as_vector().iter().map(|c| c.re).collect();
            let im: Vec<f64> = w.as_vector().iter().map(|c| c.im).collect();
            serde_json::json!({"re": re, "im": im})
        })
        .collect();
    let document = serde_json::json!({
        "method": result.method.to_string(),
        "beamformers": beamformers,
        "objective_nats": result.objective,
        "diagnostics": result.diagnostics,
    });
    fs::write(out, serde_json::to_string_pretty(&document)?)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("method {} objective {:.12} nats -> {}", result.method, result.objective, out.display());
    Ok(ExitCode::SUCCESS)
}
