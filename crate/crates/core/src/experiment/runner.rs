//! Builds and runs experiments from configs.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;
use thiserror::Error;

use crate::analysis::{
    convergence_report, lyapunov_constants, stationary_pair, AnalysisError, ConvergenceReport,
    LyapunovConstants, StationaryPair,
};
use crate::costs::{
    centralized_minimizer, example1_costs, global_cost, grid_starts, CostError, HuberCost,
    HuberSpec, MinimizeOptions, Quadratic, SharedCost,
};
use crate::dynamics::{initial_state, DynamicsError, NetworkField, NetworkState, StateLayout};
use crate::experiment::config::{ExperimentConfig, GraphSource};
use crate::experiment::data::generate_gaussian_data;
use crate::graph::{certify, Digraph, GraphError, SpectralCertificate};
use crate::integrator::{integrate, IntegrateError, Observer, Trajectory};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error(transparent)]
    Costs(#[from] CostError),

    #[error(transparent)]
    Dynamics(#[from] DynamicsError),

    #[error(transparent)]
    Integrate(#[from] IntegrateError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),

    #[error("oracle minimization failed")]
    Oracle(#[from] crate::costs::MinimizeError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything derivable from a config before integrating: the graph and its
/// certificate, the cost set, the centralized oracle, the stationary pair,
/// the Lyapunov constants, and the seeded initial state.
pub struct PreparedExperiment {
    pub config: ExperimentConfig,
    pub graph: Digraph,
    pub costs: Vec<SharedCost>,
    pub cert: SpectralCertificate,
    pub s_star: DVector<f64>,
    pub pair: StationaryPair,
    pub constants: LyapunovConstants,
    pub layout: StateLayout,
    pub initial: NetworkState,
    /// The generated measurement sets, when the cost set has any.
    pub huber_data: Option<Vec<HuberSpec>>,
}

impl PreparedExperiment {
    pub fn xi(&self) -> DVector<f64> {
        self.cert.xi_vector()
    }
}

pub struct RunOutput {
    pub prepared: PreparedExperiment,
    pub trajectory: Trajectory,
    pub report: ConvergenceReport,
}

fn build_graph(source: &GraphSource) -> Result<Digraph, ExperimentError> {
    match (&source.builtin, &source.path) {
        (Some(name), None) => match name.as_str() {
            "fig1" => Ok(Digraph::fig1()),
            other => Err(ExperimentError::Config(format!(
                "unknown builtin graph `{other}` (available: fig1)"
            ))),
        },
        (None, Some(path)) => Ok(Digraph::from_edge_list_file(path)?),
        _ => Err(ExperimentError::Config(
            "graph must specify exactly one of `builtin` or `path`".into(),
        )),
    }
}

/// Dataset stream is decoupled from the initial-condition stream so the two
/// never alias; both derive deterministically from the experiment seed.
fn init_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1)
}

struct CostSetup {
    costs: Vec<SharedCost>,
    huber_data: Option<Vec<HuberSpec>>,
    oracle_starts: Vec<DVector<f64>>,
}

fn build_costs(config: &ExperimentConfig, n_agents: usize) -> Result<CostSetup, ExperimentError> {
    match config.costs.set.as_str() {
        "example1" => {
            if config.n != 2 {
                return Err(ExperimentError::Config(format!(
                    "costs set `example1` is over R^2; config has n = {}",
                    config.n
                )));
            }
            if n_agents != 5 {
                return Err(ExperimentError::Config(format!(
                    "costs set `example1` provides 5 local costs; graph has {n_agents} agents"
                )));
            }
            Ok(CostSetup {
                costs: example1_costs(),
                huber_data: None,
                // 5x5 multi-start grid over [-10, 10]^2 guards the nonconvex locals.
                oracle_starts: grid_starts(-10.0, 10.0, 5, 2),
            })
        }
        "example2" => {
            let params = config.costs.example2.clone().unwrap_or_default();
            if config.n != params.mu.len() {
                return Err(ExperimentError::Config(format!(
                    "example2 mu has dimension {}, config has n = {}",
                    params.mu.len(),
                    config.n
                )));
            }
            let mu = DVector::from_column_slice(&params.mu);
            let scales: Vec<f64> = (1..=n_agents)
                .map(|i| params.scale_base * i as f64)
                .collect();
            let specs = generate_gaussian_data(
                config.seed,
                &mu,
                &scales,
                params.samples_per_sensor,
                params.varsigma,
            )?;
            let costs: Vec<SharedCost> = specs
                .iter()
                .map(|s| Arc::new(HuberCost::new(s.clone())) as SharedCost)
                .collect();
            Ok(CostSetup {
                costs,
                huber_data: Some(specs),
                oracle_starts: grid_starts(-5.0, 5.0, 3, config.n),
            })
        }
        "quadratics" => {
            let specs = config.costs.quadratics.clone().ok_or_else(|| {
                ExperimentError::Config("costs set `quadratics` needs [[costs.quadratics]] entries".into())
            })?;
            if specs.len() != n_agents {
                return Err(ExperimentError::Config(format!(
                    "{} quadratics for {n_agents} agents",
                    specs.len()
                )));
            }
            let costs: Vec<SharedCost> = specs
                .iter()
                .map(|q| {
                    if q.center.len() != config.n {
                        return Err(ExperimentError::Config(format!(
                            "quadratic center dimension {} != n = {}",
                            q.center.len(),
                            config.n
                        )));
                    }
                    Ok(Arc::new(Quadratic::new(
                        q.scale,
                        DVector::from_column_slice(&q.center),
                    )) as SharedCost)
                })
                .collect::<Result<_, _>>()?;
            Ok(CostSetup {
                costs,
                huber_data: None,
                oracle_starts: grid_starts(-10.0, 10.0, 3, config.n),
            })
        }
        other => Err(ExperimentError::Config(format!(
            "unknown costs set `{other}` (available: example1, example2, quadratics)"
        ))),
    }
}

fn draw_initial(config: &ExperimentConfig, n_agents: usize) -> Result<NetworkState, ExperimentError> {
    let n = config.n;
    let mut rng = ChaCha12Rng::seed_from_u64(init_seed(config.seed));
    let explicit = |lists: &Option<Vec<Vec<f64>>>, what: &str| -> Result<Option<Vec<DVector<f64>>>, ExperimentError> {
        match lists {
            None => Ok(None),
            Some(rows) => {
                if rows.len() != n_agents {
                    return Err(ExperimentError::Config(format!(
                        "init.{what} has {} rows for {n_agents} agents",
                        rows.len()
                    )));
                }
                let mut out = Vec::with_capacity(rows.len());
                for r in rows {
                    if r.len() != n {
                        return Err(ExperimentError::Config(format!(
                            "init.{what} row dimension {} != n = {n}",
                            r.len()
                        )));
                    }
                    out.push(DVector::from_column_slice(r));
                }
                Ok(Some(out))
            }
        }
    };

    // Draw order (documented for reproducibility): all x agent-major, then all v.
    let x0 = match explicit(&config.init.x, "x")? {
        Some(v) => v,
        None => {
            let [lo, hi] = config.init.x_range;
            (0..n_agents)
                .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi)))
                .collect()
        }
    };
    let v0 = match explicit(&config.init.v, "v")? {
        Some(v) => v,
        None => {
            let [lo, hi] = config.init.v_range;
            (0..n_agents)
                .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi)))
                .collect()
        }
    };
    let sigma0 = config.sigma0.resolve(n_agents);
    if sigma0.len() != n_agents {
        return Err(ExperimentError::Config(format!(
            "sigma0 has {} entries for {n_agents} agents",
            sigma0.len()
        )));
    }
    Ok(initial_state(x0, v0, &sigma0)?)
}

/// Resolves a config into a ready-to-integrate experiment, including the
/// centralized oracle and the Lyapunov certificate inputs.
pub fn prepare(config: &ExperimentConfig) -> Result<PreparedExperiment, ExperimentError> {
    config
        .integrator_config()
        .validate()
        .map_err(ExperimentError::Integrate)?;
    let graph = build_graph(&config.graph)?;
    if !graph.is_strongly_connected() {
        return Err(ExperimentError::Graph(GraphError::NotStronglyConnected));
    }
    let n_agents = graph.n_agents();
    let cert = certify(&graph)?;
    let xi = cert.xi_vector();

    let CostSetup {
        costs,
        huber_data,
        oracle_starts,
    } = build_costs(config, n_agents)?;

    let global = global_cost(&costs)?;
    let s_star = centralized_minimizer(&global, &oracle_starts, &MinimizeOptions::default())?;
    let pair = stationary_pair(&graph, &costs, &xi, &s_star)?;
    let constants = lyapunov_constants(&cert, &costs, cert.xi_min())?;
    let initial = draw_initial(config, n_agents)?;

    Ok(PreparedExperiment {
        config: config.clone(),
        graph,
        costs,
        cert,
        s_star,
        pair,
        constants,
        layout: StateLayout::new(n_agents, config.n),
        initial,
        huber_data,
    })
}

/// Integrates a prepared experiment and computes its convergence report.
pub fn run_prepared(
    prepared: PreparedExperiment,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput, ExperimentError> {
    let field = NetworkField::new(&prepared.graph, &prepared.costs, prepared.config.n)?;
    let y0 = prepared.layout.pack(&prepared.initial);
    let mut f = |_t: f64, y: &DVector<f64>| field.eval(y).map_err(Into::into);
    let trajectory = integrate(&y0, &mut f, &prepared.config.integrator_config(), observers)?;

    let xi = prepared.xi();
    let report = convergence_report(
        &trajectory,
        prepared.layout,
        &prepared.costs,
        &prepared.s_star,
        &xi,
        Some((
            &prepared.pair,
            &prepared.constants,
            &prepared.cert,
            &prepared.graph,
        )),
    );
    Ok(RunOutput {
        prepared,
        trajectory,
        report,
    })
}

/// `prepare` + integrate + report.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    run_prepared(prepare(config)?, &mut [])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_disconnected_graph() {
        let mut cfg = ExperimentConfig::example1();
        cfg.graph = GraphSource::default();
        assert!(matches!(
            prepare(&cfg),
            Err(ExperimentError::Config(_))
        ));

        // Edge-list graph with no return path.
        let dir = std::env::temp_dir().join(format!("adaflow-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("oneway.txt");
        std::fs::write(&path, "1 2\n2 3\n").unwrap();
        let mut cfg = ExperimentConfig::example1();
        cfg.graph = GraphSource {
            builtin: None,
            path: Some(path),
        };
        match prepare(&cfg) {
            Err(ExperimentError::Graph(GraphError::NotStronglyConnected)) => {}
            other => panic!("expected connectivity rejection, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn example1_dimension_guard() {
        let mut cfg = ExperimentConfig::example1();
        cfg.n = 3;
        assert!(matches!(prepare(&cfg), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn initial_conditions_are_seeded_and_in_range() {
        let cfg = ExperimentConfig::example1();
        let a = draw_initial(&cfg, 5).unwrap();
        let b = draw_initial(&cfg, 5).unwrap();
        assert_eq!(a, b);
        for agent in &a.agents {
            for k in 0..2 {
                assert!(agent.x[k] >= -5.0 && agent.x[k] <= 5.0);
                assert!(agent.v[k] >= -5.0 && agent.v[k] <= 5.0);
            }
            assert_eq!(agent.sigma, 1.0);
        }
        let mut cfg2 = cfg.clone();
        cfg2.seed = 43;
        let c = draw_initial(&cfg2, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn explicit_initial_conditions_override_ranges() {
        let mut cfg = ExperimentConfig::example1();
        cfg.init.x = Some(vec![vec![0.0, 0.0]; 5]);
        cfg.init.v = Some(vec![vec![1.0, -1.0]; 5]);
        let st = draw_initial(&cfg, 5).unwrap();
        for a in &st.agents {
            assert_eq!(a.x, nalgebra::dvector![0.0, 0.0]);
            assert_eq!(a.v, nalgebra::dvector![1.0, -1.0]);
        }
    }

    #[test]
    fn quadratics_set_runs_end_to_end() {
        use crate::experiment::config::{CostsSpec, QuadraticSpec};
        let mut cfg = ExperimentConfig::example1();
        cfg.costs = CostsSpec {
            set: "quadratics".into(),
            example2: None,
            quadratics: Some(
                (0..5)
                    .map(|i| QuadraticSpec {
                        center: vec![i as f64, -(i as f64)],
                        scale: 1.0 + 0.1 * i as f64,
                    })
                    .collect(),
            ),
        };
        cfg.t_end = 20.0;
        let out = run(&cfg).unwrap();
        assert!(
            out.report.distance_to_oracle < 1e-2,
            "distance {}",
            out.report.distance_to_oracle
        );
        assert!(out.trajectory.halved_steps == 0);
    }
}
