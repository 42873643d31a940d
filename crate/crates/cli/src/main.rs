//! `adaflow` — run, verify, and inspect distributed adaptive-flow experiments.
//!
//! ```text
//! adaflow run <config.toml | example1 | example2> [--output-dir DIR]
//! adaflow verify <config.toml | example1 | example2>
//! adaflow oracle <config.toml | example1 | example2>
//! adaflow report <trajectory.csv> [--sidecar report.json]
//! ```
//!
//! `run` writes `trajectory.csv`, `report.json` and (for generated datasets)
//! `dataset.csv` into the output directory. `verify` prints one PASS/FAIL
//! line per check and exits nonzero if any check fails. `oracle` prints the
//! centralized minimizer, the left eigenvector, and the spectral certificate
//! as JSON. `report` recomputes metrics from a saved trajectory against its
//! sidecar's config echo.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use adaflow::experiment::{self, recompute_from_csv, verify_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "adaflow", version, about = "Distributed adaptive gradient-flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write trajectory/report files.
    Run {
        /// Path to a TOML config, or a built-in name (example1, example2).
        config: String,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the oracle/verification suite for an experiment setup.
    Verify {
        config: String,
    },
    /// Print s*, xi, and the spectral certificate as JSON.
    Oracle {
        config: String,
    },
    /// Recompute metrics from a saved trajectory.csv.
    Report {
        trajectory: PathBuf,
        /// Sidecar report.json holding the config echo (defaults to
        /// report.json next to the trajectory).
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
}

fn load_config(arg: &str) -> Result<ExperimentConfig> {
    if let Some(cfg) = ExperimentConfig::builtin(arg) {
        return Ok(cfg);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("`{arg}` is neither a built-in experiment (example1, example2) nor an existing config file");
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    ExperimentConfig::from_toml_str(&text).with_context(|| format!("parsing {arg}"))
}

fn cmd_run(config: &str, output_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = Some(dir);
    }
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = experiment::run(&cfg)?;
    experiment::write_outputs(&dir, &out)?;
    eprintln!(
        "wrote {} records to {} (final distance to oracle {:.3e}, consensus error {:.3e})",
        out.trajectory.times.len(),
        dir.display(),
        out.report.distance_to_oracle,
        out.report.consensus_error,
    );
    Ok(())
}

fn cmd_verify(config: &str) -> Result<bool> {
    let cfg = load_config(config)?;
    let prepared = experiment::prepare(&cfg)?;
    let results = verify_experiment(&prepared);
    let mut all_ok = true;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<40} {}", r.name, r.detail);
        all_ok &= r.passed;
    }
    Ok(all_ok)
}

fn cmd_oracle(config: &str) -> Result<()> {
    let cfg = load_config(config)?;
    let prepared = experiment::prepare(&cfg)?;
    let doc = serde_json::json!({
        "s_star": prepared.s_star.as_slice(),
        "xi": prepared.cert.xi,
        "certificate": prepared.cert,
        "lyapunov_constants": prepared.constants,
        "stationary_solve_residual": prepared.pair.solve_residual,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_report(trajectory: &Path, sidecar: Option<PathBuf>) -> Result<()> {
    let sidecar = sidecar.unwrap_or_else(|| {
        trajectory
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("report.json")
    });
    let text = std::fs::read_to_string(&sidecar)
        .with_context(|| format!("reading sidecar {}", sidecar.display()))?;
    let sidecar_doc: serde_json::Value = serde_json::from_str(&text)?;
    let config_value = sidecar_doc
        .get("config")
        .context("sidecar has no `config` echo")?;
    let cfg: ExperimentConfig = serde_json::from_value(config_value.clone())?;
    let recomputed = recompute_from_csv(trajectory, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&recomputed)?);
    if !recomputed.consistent {
        bail!("stored metric columns disagree with recomputed values");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output_dir } => cmd_run(&config, output_dir).map(|()| true),
        Command::Verify { config } => cmd_verify(&config),
        Command::Oracle { config } => cmd_oracle(&config).map(|()| true),
        Command::Report { trajectory, sidecar } => {
            cmd_report(&trajectory, sidecar).map(|()| true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let doc = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{doc}");
            ExitCode::from(1)
        }
    }
}
