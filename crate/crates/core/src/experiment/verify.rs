//! The `verify` check suite and trajectory-file metric recomputation.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::analysis::{
    lyapunov_decrease_check, optimality_residual, sample_states_near, DecreaseCheckOptions,
};
use crate::costs::{gradient_check, near_singular};
use crate::dynamics::{AgentState, NetworkState};
use crate::experiment::export::read_trajectory_csv;
use crate::experiment::runner::{prepare, ExperimentError, PreparedExperiment};
use crate::graph::matrix_exponential_limit_check;

/// Outcome of one verification check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Exclusion radius around declared singular points for sampled checks.
const SINGULAR_RADIUS: f64 = 0.5;

fn sample_box_point(
    rng: &mut impl Rng,
    dim: usize,
    lo: f64,
    hi: f64,
    cost: &dyn crate::costs::Cost,
) -> DVector<f64> {
    loop {
        let p = DVector::from_fn(dim, |_, _| rng.gen_range(lo..=hi));
        if !near_singular(cost, &p, SINGULAR_RADIUS) {
            return p;
        }
    }
}

/// Runs the full verification suite on a prepared experiment: spectral
/// oracles, cost-gradient and Lipschitz checks, the stationarity round trip,
/// and the sampled Lyapunov decrease certificate (with its negative control).
pub fn verify_experiment(prepared: &PreparedExperiment) -> Vec<CheckResult> {
    let mut results = Vec::new();
    let g = &prepared.graph;
    let cert = &prepared.cert;
    let xi = prepared.xi();
    let l = g.laplacian();

    results.push(CheckResult::new(
        "graph.strongly_connected",
        g.is_strongly_connected(),
        format!("N = {}, balanced = {}", g.n_agents(), g.is_balanced()),
    ));

    let xi_residual = (xi.transpose() * l.matrix()).abs().max();
    results.push(CheckResult::new(
        "graph.left_eigenvector",
        xi_residual < 1e-10,
        format!("max |xi^T L| = {xi_residual:.3e}"),
    ));

    results.push(CheckResult::new(
        "graph.spectral_certificate",
        cert.lambda2_bar > 0.0 && cert.lambda_n_ltl > 0.0 && cert.lambda2_ltl > 0.0,
        format!(
            "lambda2(Lbar) = {:.6}, lambdaN(LtL) = {:.6}, lambda2(LtL) = {:.6}",
            cert.lambda2_bar, cert.lambda_n_ltl, cert.lambda2_ltl
        ),
    ));

    let t_limit = 100.0 / cert.lambda2_bar;
    let exp_report =
        matrix_exponential_limit_check(&l, &xi, &[0.0, 1.0, 10.0, 50.0, t_limit]);
    let final_dev = exp_report.final_deviation();
    results.push(CheckResult::new(
        "graph.heat_kernel_limit",
        exp_report.passed() && final_dev < 1e-8,
        format!("deviation at t = {t_limit:.2}: {final_dev:.3e}"),
    ));

    // Cost oracles.
    let mut rng = ChaCha12Rng::seed_from_u64(prepared.config.seed ^ 0x5EED_CAFE);
    let dim = prepared.config.n;
    for (i, cost) in prepared.costs.iter().enumerate() {
        let pts: Vec<DVector<f64>> = (0..100)
            .map(|_| sample_box_point(&mut rng, dim, -5.0, 5.0, cost.as_ref()))
            .collect();
        let report = gradient_check(cost.as_ref(), &pts, 1e-5);
        results.push(CheckResult::new(
            &format!("costs.gradient_check.{}", i + 1),
            report.max_relative_error < 1e-5,
            format!("max relative error {:.3e}", report.max_relative_error),
        ));

        if let Some(hint) = cost.lipschitz_hint() {
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let a = sample_box_point(&mut rng, dim, -5.0, 5.0, cost.as_ref());
                let b = sample_box_point(&mut rng, dim, -5.0, 5.0, cost.as_ref());
                let d = (&a - &b).norm();
                if d == 0.0 {
                    continue;
                }
                let gd = (cost.gradient(&a) - cost.gradient(&b)).norm();
                worst = worst.max(gd - hint * d);
            }
            results.push(CheckResult::new(
                &format!("costs.lipschitz_hint.{}", i + 1),
                worst <= 1e-9,
                format!("max secant excess over hint {hint}: {worst:.3e}"),
            ));
        }
    }

    // Centralized oracle and stationarity.
    let grad_norm: f64 = {
        let mut gsum = DVector::zeros(dim);
        for c in &prepared.costs {
            gsum += c.gradient(&prepared.s_star);
        }
        gsum.norm()
    };
    results.push(CheckResult::new(
        "oracle.first_order",
        grad_norm < 1e-9,
        format!("|grad f(s*)| = {grad_norm:.3e} at s* = {:?}", prepared.s_star.as_slice()),
    ));

    let hess_ok = {
        // Numerical Hessian of the global cost at s*; positive definiteness
        // backs the local strict-convexity claim.
        let h = 1e-5;
        let mut hess = nalgebra::DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut p = prepared.s_star.clone();
            let mut m = prepared.s_star.clone();
            p[k] += h;
            m[k] -= h;
            let mut gp = DVector::zeros(dim);
            let mut gm = DVector::zeros(dim);
            for c in &prepared.costs {
                gp += c.gradient(&p);
                gm += c.gradient(&m);
            }
            let col = (gp - gm) / (2.0 * h);
            hess.column_mut(k).copy_from(&col);
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let eigs = sym.symmetric_eigen().eigenvalues;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        results.push(CheckResult::new(
            "oracle.hessian_positive_definite",
            min_eig > 0.0,
            format!("min eigenvalue {min_eig:.4}"),
        ));
        min_eig > 0.0
    };
    let _ = hess_ok;

    let consensus = NetworkState {
        agents: (0..g.n_agents())
            .map(|_| AgentState {
                x: prepared.s_star.clone(),
                v: DVector::zeros(dim),
                w: xi.clone(),
                sigma: 1.0,
            })
            .collect(),
        time: 0.0,
    };
    let resid = optimality_residual(&consensus, &prepared.costs, &xi);
    results.push(CheckResult::new(
        "oracle.optimality_residual_at_consensus",
        resid < 1e-9,
        format!("residual {resid:.3e}"),
    ));

    let stacked = crate::analysis::unperturbed_stacked_residual(
        g,
        &prepared.costs,
        &xi,
        &prepared.pair,
        &vec![1.0; g.n_agents()],
    );
    results.push(CheckResult::new(
        "stationarity.round_trip",
        stacked < 1e-9,
        format!("max |field(x̄, v̄)| = {stacked:.3e}"),
    ));

    // Lyapunov decrease sampling plus its negative control.
    let mut rng = ChaCha12Rng::seed_from_u64(prepared.config.seed ^ 0x11AA_90FF);
    let samples = sample_states_near(&mut rng, &prepared.pair, &xi, 0.5, (0.5, 3.0), 100);
    let report = lyapunov_decrease_check(
        &samples,
        &prepared.pair,
        g,
        &prepared.costs,
        cert,
        &prepared.constants,
        &DecreaseCheckOptions::default(),
    );
    results.push(CheckResult::new(
        "lyapunov.decrease_sampled",
        report.passed(),
        format!("{} violations / {} samples", report.violations, report.checked),
    ));

    let mut zeroed = prepared.constants.clone();
    zeroed.sigma_zero = 0.0;
    let control = lyapunov_decrease_check(
        &samples,
        &prepared.pair,
        g,
        &prepared.costs,
        cert,
        &zeroed,
        &DecreaseCheckOptions::default(),
    );
    results.push(CheckResult::new(
        "lyapunov.negative_control",
        control.violations >= 1,
        format!(
            "sigma0 = 0 control produced {} violations (expected >= 1)",
            control.violations
        ),
    ));

    results
}

/// Metrics recomputed from a saved `trajectory.csv` plus its config.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RecomputedReport {
    pub records: usize,
    /// Final-record metrics recomputed from the states in the file.
    pub consensus_error: f64,
    pub optimality_residual: f64,
    pub distance_to_oracle: f64,
    /// Echoed from the stored metric column (w snapshots are not persisted).
    pub w_error_stored: f64,
    /// Max abs difference between stored and recomputed metric columns.
    pub max_consensus_diff: f64,
    pub max_optimality_diff: f64,
    /// True when stored and recomputed columns agree to 1e-9.
    pub consistent: bool,
}

/// Recomputes metrics from a saved trajectory using the run's config (echoed
/// in `report.json`) to rebuild the graph, costs, and oracle.
pub fn recompute_from_csv(
    csv_path: &std::path::Path,
    config: &crate::experiment::config::ExperimentConfig,
) -> Result<RecomputedReport, ExperimentError> {
    let file = read_trajectory_csv(csv_path)?;
    let prepared = prepare(config)?;
    if file.n_agents != prepared.graph.n_agents() || file.dim != config.n {
        return Err(ExperimentError::Config(format!(
            "trajectory shape ({} agents, dim {}) does not match config ({}, {})",
            file.n_agents,
            file.dim,
            prepared.graph.n_agents(),
            config.n
        )));
    }
    let xi = prepared.xi();
    let mut max_consensus_diff = 0.0f64;
    let mut max_optimality_diff = 0.0f64;
    let mut last = None;
    for (k, t) in file.times.iter().enumerate() {
        let agents: Vec<AgentState> = (0..file.n_agents)
            .map(|i| AgentState {
                x: file.xs[k].rows(i * file.dim, file.dim).into_owned(),
                v: file.vs[k].rows(i * file.dim, file.dim).into_owned(),
                w: xi.clone(),
                sigma: file.sigmas[k][i],
            })
            .collect();
        let state = NetworkState { agents, time: *t };
        let consensus = state.consensus_spread();
        let resid = optimality_residual(&state, &prepared.costs, &xi);
        let dist = crate::analysis::distance_to_point(&state, &prepared.s_star);
        let stored = file.stored_metrics[k];
        max_consensus_diff = max_consensus_diff.max((consensus - stored.0).abs());
        max_optimality_diff = max_optimality_diff.max((resid - stored.1).abs());
        last = Some((consensus, resid, dist, stored.2));
    }
    let (consensus_error, optimality_residual, distance_to_oracle, w_error_stored) =
        last.ok_or_else(|| ExperimentError::Config("trajectory file has no records".into()))?;
    Ok(RecomputedReport {
        records: file.times.len(),
        consensus_error,
        optimality_residual,
        distance_to_oracle,
        w_error_stored,
        max_consensus_diff,
        max_optimality_diff,
        consistent: max_consensus_diff < 1e-9 && max_optimality_diff < 1e-9,
    })
}
