//! File outputs: `trajectory.csv`, `report.json`, `dataset.csv`.
//!
//! `trajectory.csv` has one row per record with the exact header
//!
//! ```text
//! t,x_1_1,...,x_N_n,v_1_1,...,v_N_n,sigma_1,...,sigma_N,consensus_error,optimality_residual,w_error
//! ```
//!
//! (agent index first, coordinate second, both 1-based). Floats are written
//! with Rust's shortest round-trip formatting, so identical runs produce
//! byte-identical files. The `w` components are not exported per row — the
//! `w_error` metric column summarizes them; full snapshots live in memory
//! only.

use nalgebra::DVector;
use std::io::Write;
use std::path::Path;

use crate::analysis::{ConvergenceReport, LyapunovConstants};
use crate::costs::HuberSpec;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::runner::{ExperimentError, RunOutput};
use crate::graph::SpectralCertificate;

/// The JSON sidecar: config echo, oracle values, certificate, constants,
/// headline metrics, and the full series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub oracle: OracleInfo,
    pub integration: IntegrationInfo,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleInfo {
    /// Centralized multi-start minimizer of the global cost.
    pub s_star: Vec<f64>,
    /// Left eigenvector of the Laplacian (unit sum, positive).
    pub xi: Vec<f64>,
    pub certificate: SpectralCertificate,
    pub lyapunov_constants: LyapunovConstants,
    /// Residual of the stationary-pair linear solve.
    pub stationary_solve_residual: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IntegrationInfo {
    pub steps: usize,
    pub halved_steps: usize,
    pub final_time: f64,
}

pub fn build_report(out: &RunOutput) -> RunReport {
    RunReport {
        config: out.prepared.config.clone(),
        oracle: OracleInfo {
            s_star: out.prepared.s_star.iter().cloned().collect(),
            xi: out.prepared.cert.xi.clone(),
            certificate: out.prepared.cert.clone(),
            lyapunov_constants: out.prepared.constants.clone(),
            stationary_solve_residual: out.prepared.pair.solve_residual,
        },
        integration: IntegrationInfo {
            steps: out.prepared.config.integrator_config().n_steps(),
            halved_steps: out.trajectory.halved_steps,
            final_time: out.trajectory.final_time,
        },
        report: out.report.clone(),
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Writes `trajectory.csv`; see module docs for the column layout.
pub fn write_trajectory_csv<P: AsRef<Path>>(path: P, out: &RunOutput) -> Result<(), ExperimentError> {
    let layout = out.prepared.layout;
    let (n_agents, dim) = (layout.n_agents, layout.dim);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);

    let mut header = String::from("t");
    for i in 1..=n_agents {
        for k in 1..=dim {
            header.push_str(&format!(",x_{i}_{k}"));
        }
    }
    for i in 1..=n_agents {
        for k in 1..=dim {
            header.push_str(&format!(",v_{i}_{k}"));
        }
    }
    for i in 1..=n_agents {
        header.push_str(&format!(",sigma_{i}"));
    }
    header.push_str(",consensus_error,optimality_residual,w_error");
    writeln!(file, "{header}")?;

    for (idx, (t, flat)) in out.trajectory.times.iter().zip(&out.trajectory.states).enumerate() {
        let m = &out.report.series[idx];
        let mut row = fmt(*t);
        for i in 0..n_agents {
            let x = layout.x_at(flat, i);
            for k in 0..dim {
                row.push(',');
                row.push_str(&fmt(x[k]));
            }
        }
        for i in 0..n_agents {
            let v = layout.v_at(flat, i);
            for k in 0..dim {
                row.push(',');
                row.push_str(&fmt(v[k]));
            }
        }
        for i in 0..n_agents {
            row.push(',');
            row.push_str(&fmt(layout.sigma_at(flat, i)));
        }
        row.push(',');
        row.push_str(&fmt(m.consensus_error));
        row.push(',');
        row.push_str(&fmt(m.optimality_residual));
        row.push(',');
        row.push_str(&fmt(m.w_error));
        writeln!(file, "{row}")?;
    }
    Ok(())
}

/// Writes the JSON sidecar `report.json`.
pub fn write_report_json<P: AsRef<Path>>(path: P, out: &RunOutput) -> Result<(), ExperimentError> {
    let report = build_report(out);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(path, text.as_bytes())?;
    Ok(())
}

/// Writes `dataset.csv` with columns `sensor,sample,q_1,...,q_n` (1-based ids).
pub fn write_dataset_csv<P: AsRef<Path>>(path: P, specs: &[HuberSpec]) -> Result<(), ExperimentError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let dim = specs.first().map(|s| s.dim()).unwrap_or(0);
    let mut header = String::from("sensor,sample");
    for k in 1..=dim {
        header.push_str(&format!(",q_{k}"));
    }
    writeln!(file, "{header}")?;
    for (i, spec) in specs.iter().enumerate() {
        for (j, q) in spec.data().iter().enumerate() {
            let mut row = format!("{},{}", i + 1, j + 1);
            for k in 0..dim {
                row.push(',');
                row.push_str(&fmt(q[k]));
            }
            writeln!(file, "{row}")?;
        }
    }
    Ok(())
}

/// A parsed `trajectory.csv`.
#[derive(Debug, Clone)]
pub struct TrajectoryFile {
    pub n_agents: usize,
    pub dim: usize,
    pub times: Vec<f64>,
    /// Per record: stacked agent states `x` (agent-major).
    pub xs: Vec<DVector<f64>>,
    pub vs: Vec<DVector<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    /// Stored metric columns `(consensus_error, optimality_residual, w_error)`.
    pub stored_metrics: Vec<(f64, f64, f64)>,
}

/// Reads a `trajectory.csv` produced by [`write_trajectory_csv`].
pub fn read_trajectory_csv<P: AsRef<Path>>(path: P) -> Result<TrajectoryFile, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ExperimentError::Config("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_agents = cols
        .iter()
        .filter(|c| c.starts_with("sigma_"))
        .count();
    let x_cols = cols.iter().filter(|c| c.starts_with("x_")).count();
    if n_agents == 0 || x_cols == 0 || x_cols % n_agents != 0 {
        return Err(ExperimentError::Config(format!(
            "unrecognized trajectory header: {header}"
        )));
    }
    let dim = x_cols / n_agents;
    let expected_cols = 1 + 2 * n_agents * dim + n_agents + 3;
    if cols.len() != expected_cols {
        return Err(ExperimentError::Config(format!(
            "trajectory header has {} columns, expected {expected_cols}",
            cols.len()
        )));
    }

    let mut out = TrajectoryFile {
        n_agents,
        dim,
        times: Vec::new(),
        xs: Vec::new(),
        vs: Vec::new(),
        sigmas: Vec::new(),
        stored_metrics: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| {
            ExperimentError::Config(format!("trajectory row {}: {e}", lineno + 2))
        })?;
        if vals.len() != expected_cols {
            return Err(ExperimentError::Config(format!(
                "trajectory row {} has {} fields, expected {expected_cols}",
                lineno + 2,
                vals.len()
            )));
        }
        let nd = n_agents * dim;
        out.times.push(vals[0]);
        out.xs.push(DVector::from_column_slice(&vals[1..1 + nd]));
        out.vs
            .push(DVector::from_column_slice(&vals[1 + nd..1 + 2 * nd]));
        out.sigmas
            .push(vals[1 + 2 * nd..1 + 2 * nd + n_agents].to_vec());
        let m = &vals[1 + 2 * nd + n_agents..];
        out.stored_metrics.push((m[0], m[1], m[2]));
    }
    Ok(out)
}

/// Writes the three run outputs into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    write_trajectory_csv(dir.join("trajectory.csv"), out)?;
    write_report_json(dir.join("report.json"), out)?;
    if let Some(specs) = &out.prepared.huber_data {
        write_dataset_csv(dir.join("dataset.csv"), specs)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentConfig;
    use crate::experiment::runner::run;

    #[test]
    fn csv_round_trip_short_run() {
        let mut cfg = ExperimentConfig::example1();
        cfg.t_end = 0.5;
        cfg.stride = 100;
        let out = run(&cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("adaflow-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trajectory.csv");
        write_trajectory_csv(&path, &out).unwrap();
        let parsed = read_trajectory_csv(&path).unwrap();
        assert_eq!(parsed.n_agents, 5);
        assert_eq!(parsed.dim, 2);
        assert_eq!(parsed.times.len(), out.trajectory.times.len());
        // Shortest round-trip formatting parses back exactly.
        for (k, t) in out.trajectory.times.iter().enumerate() {
            assert_eq!(parsed.times[k], *t);
        }
        let last = parsed.xs.last().unwrap();
        let expect = out.prepared.layout.x_at(&out.trajectory.final_state, 0);
        assert_eq!(last[0], expect[0]);
        std::fs::remove_dir_all(&dir).ok();
    }
}
