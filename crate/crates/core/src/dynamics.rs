//! Network state and the per-agent vector field of the adaptive flow.
//!
//! Each agent carries `(x_i ∈ Rⁿ, v_i ∈ Rⁿ, w_i ∈ Rᴺ, σ_i > 0)` and evolves by
//!
//! ```text
//! ẋ_i = -∇f_i(x_i)/w_i^i - (σ_i + ρ_i) e_i - Σ_j a_ij (v_i - v_j)
//! v̇_i = (σ_i + ρ_i) e_i
//! ẇ_i = -Σ_j a_ij (w_i - w_j)
//! σ̇_i = e_iᵀ e_i
//! ```
//!
//! where `e_i = Σ_j a_ij (x_i - x_j)` is the weighted disagreement and
//! `ρ_i = e_iᵀ e_i` is a memoryless gain recomputed from the instantaneous
//! state — it is the integrand of `σ̇_i`, not an integrated state of its own.
//!
//! Initialized with `w_i(0)` the i-th standard basis vector, the `w`-dynamics
//! reduce to the Laplacian heat flow, which keeps every `w_i^i(t)` strictly
//! positive and drives every `w_i` to the left eigenvector `ξ`. The division
//! by `w_i^i` is therefore well defined in exact arithmetic; a nonpositive
//! `w_i^i` at evaluation time means the integration step was too coarse and
//! is reported as a retryable fault.
//!
//! For the integrator, states are packed into flat vectors with layout
//! `[x (N·n) | v (N·n) | w (N·N) | σ (N)]`, agent-major.

use nalgebra::DVector;
use thiserror::Error;

use crate::costs::SharedCost;
use crate::graph::Digraph;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("agent {agent}: sigma(0) = {value} must be positive")]
    NonPositiveSigma { agent: usize, value: f64 },

    #[error("expected {expected} agents, got {got}")]
    AgentCountMismatch { expected: usize, got: usize },

    #[error("agent {agent}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        agent: usize,
        expected: usize,
        got: usize,
    },

    #[error("agent {agent}: w_i^i = {value:.6e} is not positive (integration step too coarse for the weight dynamics)")]
    NonPositiveWeight { agent: usize, value: f64 },

    #[error("agent {agent}: non-finite derivative component")]
    NonFiniteDerivative { agent: usize },
}

/// One agent's state tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub sigma: f64,
}

/// The stacked state of all `N` agents at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub agents: Vec<AgentState>,
    pub time: f64,
}

impl NetworkState {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.agents[0].x.len()
    }

    /// `max_{i,j} ‖x_i - x_j‖`.
    pub fn consensus_spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.agents.len() {
            for j in (i + 1)..self.agents.len() {
                worst = worst.max((&self.agents[i].x - &self.agents[j].x).norm());
            }
        }
        worst
    }

    /// Smallest own-index weight component `min_i w_i^i`.
    pub fn min_own_weight(&self) -> f64 {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.w[i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Flat-vector layout for a network of `n_agents` agents in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_agents: usize,
    pub dim: usize,
}

impl StateLayout {
    pub fn new(n_agents: usize, dim: usize) -> Self {
        Self { n_agents, dim }
    }

    pub fn len(&self) -> usize {
        2 * self.n_agents * self.dim + self.n_agents * self.n_agents + self.n_agents
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_at<'a>(&self, flat: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        flat.rows(i * self.dim, self.dim)
    }

    pub fn v_at<'a>(&self, flat: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        flat.rows(self.n_agents * self.dim + i * self.dim, self.dim)
    }

    pub fn w_at<'a>(&self, flat: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        flat.rows(2 * self.n_agents * self.dim + i * self.n_agents, self.n_agents)
    }

    pub fn sigma_at(&self, flat: &DVector<f64>, i: usize) -> f64 {
        flat[2 * self.n_agents * self.dim + self.n_agents * self.n_agents + i]
    }

    /// Own-index weight `w_i^i` read straight out of the flat vector.
    pub fn own_weight(&self, flat: &DVector<f64>, i: usize) -> f64 {
        flat[2 * self.n_agents * self.dim + i * self.n_agents + i]
    }

    pub fn pack(&self, state: &NetworkState) -> DVector<f64> {
        let mut flat = DVector::zeros(self.len());
        for (i, a) in state.agents.iter().enumerate() {
            flat.rows_mut(i * self.dim, self.dim).copy_from(&a.x);
            flat.rows_mut(self.n_agents * self.dim + i * self.dim, self.dim)
                .copy_from(&a.v);
            flat.rows_mut(2 * self.n_agents * self.dim + i * self.n_agents, self.n_agents)
                .copy_from(&a.w);
            flat[2 * self.n_agents * self.dim + self.n_agents * self.n_agents + i] = a.sigma;
        }
        flat
    }

    pub fn unpack(&self, flat: &DVector<f64>, time: f64) -> NetworkState {
        let agents = (0..self.n_agents)
            .map(|i| AgentState {
                x: self.x_at(flat, i).into_owned(),
                v: self.v_at(flat, i).into_owned(),
                w: self.w_at(flat, i).into_owned(),
                sigma: self.sigma_at(flat, i),
            })
            .collect();
        NetworkState { agents, time }
    }
}

/// Builds the prescribed initial state: `w_i(0)` is the i-th standard basis
/// vector of `R^N` (`w_i^i(0) = 1`, all other components zero); `x(0)`, `v(0)`
/// are free; `σ_i(0)` must all be positive.
pub fn initial_state(
    x0: Vec<DVector<f64>>,
    v0: Vec<DVector<f64>>,
    sigma0: &[f64],
) -> Result<NetworkState, DynamicsError> {
    let n_agents = x0.len();
    if v0.len() != n_agents {
        return Err(DynamicsError::AgentCountMismatch {
            expected: n_agents,
            got: v0.len(),
        });
    }
    if sigma0.len() != n_agents {
        return Err(DynamicsError::AgentCountMismatch {
            expected: n_agents,
            got: sigma0.len(),
        });
    }
    let dim = x0.first().map(|x| x.len()).unwrap_or(0);
    let mut agents = Vec::with_capacity(n_agents);
    for (i, (x, v)) in x0.into_iter().zip(v0.into_iter()).enumerate() {
        if x.len() != dim {
            return Err(DynamicsError::DimensionMismatch {
                agent: i,
                expected: dim,
                got: x.len(),
            });
        }
        if v.len() != dim {
            return Err(DynamicsError::DimensionMismatch {
                agent: i,
                expected: dim,
                got: v.len(),
            });
        }
        if sigma0[i] <= 0.0 {
            return Err(DynamicsError::NonPositiveSigma {
                agent: i,
                value: sigma0[i],
            });
        }
        let mut w = DVector::zeros(n_agents);
        w[i] = 1.0;
        agents.push(AgentState {
            x,
            v,
            w,
            sigma: sigma0[i],
        });
    }
    Ok(NetworkState { agents, time: 0.0 })
}

/// Weighted disagreement `e_i = Σ_j a_ij (x_i - x_j)` for every agent.
pub fn consensus_error_vector(state: &NetworkState, g: &Digraph) -> Vec<DVector<f64>> {
    (0..state.n_agents())
        .map(|i| {
            let mut e = DVector::zeros(state.dim());
            for (j, a) in g.in_neighbors(i) {
                e += (&state.agents[i].x - &state.agents[j].x) * a;
            }
            e
        })
        .collect()
}

/// The coupled network vector field, evaluated per agent on flat-packed
/// states. Implements the simultaneous (synchronous) semantics: every
/// derivative reads the same pre-step state.
pub struct NetworkField<'a> {
    costs: &'a [SharedCost],
    layout: StateLayout,
    /// In-neighbor lists `(j, a_ij)` per agent, precomputed from the graph.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl<'a> NetworkField<'a> {
    pub fn new(
        graph: &'a Digraph,
        costs: &'a [SharedCost],
        dim: usize,
    ) -> Result<Self, DynamicsError> {
        let n_agents = graph.n_agents();
        if costs.len() != n_agents {
            return Err(DynamicsError::AgentCountMismatch {
                expected: n_agents,
                got: costs.len(),
            });
        }
        for (i, c) in costs.iter().enumerate() {
            if c.dim() != dim {
                return Err(DynamicsError::DimensionMismatch {
                    agent: i,
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let neighbors = (0..n_agents)
            .map(|i| graph.in_neighbors(i).collect())
            .collect();
        Ok(Self {
            costs,
            layout: StateLayout::new(n_agents, dim),
            neighbors,
        })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    /// Evaluates the field on a flat state vector.
    ///
    /// Fails with a retryable fault if any `w_i^i ≤ 0` or any derivative
    /// component is non-finite (e.g. a cost gradient returned NaN).
    pub fn eval(&self, flat: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
        let lay = self.layout;
        let (n_agents, dim) = (lay.n_agents, lay.dim);
        let s = flat.as_slice();
        let x_off = 0;
        let v_off = n_agents * dim;
        let w_off = 2 * n_agents * dim;
        let sig_off = w_off + n_agents * n_agents;
        let mut out = DVector::zeros(lay.len());
        let o = out.as_mut_slice();
        let mut x_arg = DVector::zeros(dim);
        for i in 0..n_agents {
            let wii = s[w_off + i * n_agents + i];
            if wii <= 0.0 {
                return Err(DynamicsError::NonPositiveWeight {
                    agent: i,
                    value: wii,
                });
            }
            // e_i into the dv slot, neighbor sums of v and w straight into
            // their output slots.
            let mut rho = 0.0;
            for k in 0..dim {
                let mut e_k = 0.0;
                let mut nv_k = 0.0;
                for &(j, a) in &self.neighbors[i] {
                    e_k += a * (s[x_off + i * dim + k] - s[x_off + j * dim + k]);
                    nv_k += a * (s[v_off + i * dim + k] - s[v_off + j * dim + k]);
                }
                o[x_off + i * dim + k] = -nv_k;
                o[v_off + i * dim + k] = e_k;
                rho += e_k * e_k;
            }
            for m in 0..n_agents {
                let mut nw_m = 0.0;
                for &(j, a) in &self.neighbors[i] {
                    nw_m += a * (s[w_off + i * n_agents + m] - s[w_off + j * n_agents + m]);
                }
                o[w_off + i * n_agents + m] = -nw_m;
            }
            let gain = s[sig_off + i] + rho;

            for k in 0..dim {
                x_arg[k] = s[x_off + i * dim + k];
            }
            let grad = self.costs[i].gradient(&x_arg);
            let mut finite = rho.is_finite();
            for k in 0..dim {
                let e_k = o[v_off + i * dim + k];
                let dx = -grad[k] / wii - gain * e_k + o[x_off + i * dim + k];
                let dv = gain * e_k;
                o[x_off + i * dim + k] = dx;
                o[v_off + i * dim + k] = dv;
                finite &= dx.is_finite() && dv.is_finite();
            }
            if !finite {
                return Err(DynamicsError::NonFiniteDerivative { agent: i });
            }
            o[sig_off + i] = rho;
        }
        Ok(out)
    }

    /// Typed-view convenience: evaluates the field on a [`NetworkState`] and
    /// returns the derivative as a flat vector in the same layout.
    pub fn eval_state(&self, state: &NetworkState) -> Result<DVector<f64>, DynamicsError> {
        self.eval(&self.layout.pack(state))
    }
}

/// Laplacian-projected error coordinates relative to a stationary pair:
/// `ζ = (L⊗I_n)(x - x̄)`, `η = (L⊗I_n)(v - v̄)`.
#[derive(Debug, Clone)]
pub struct ErrorCoordinates {
    pub zeta: DVector<f64>,
    pub eta: DVector<f64>,
    dim: usize,
}

impl ErrorCoordinates {
    /// Per-agent block `ζ_i`.
    pub fn zeta_block(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.zeta.rows(i * self.dim, self.dim)
    }

    pub fn eta_block(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.eta.rows(i * self.dim, self.dim)
    }

    pub fn n_blocks(&self) -> usize {
        self.zeta.len() / self.dim
    }
}

/// Applies `(L ⊗ I_n)` blockwise to a stacked vector (rows of `L` combine
/// agent blocks).
pub fn laplacian_kron_apply(
    l: &crate::graph::Laplacian,
    stacked: &DVector<f64>,
    dim: usize,
) -> DVector<f64> {
    let n = l.n();
    let mut out = DVector::zeros(n * dim);
    for i in 0..n {
        let mut block = DVector::zeros(dim);
        for j in 0..n {
            let lij = l.matrix()[(i, j)];
            if lij != 0.0 {
                block.axpy(lij, &stacked.rows(j * dim, dim).into_owned(), 1.0);
            }
        }
        out.rows_mut(i * dim, dim).copy_from(&block);
    }
    out
}

/// Computes `ζ, η` for a state against the stationary pair `(x̄, v̄)`.
///
/// `x_bar` is the consensus point repeated per agent (a single `Rⁿ` vector);
/// `v_bar` is a full stacked `R^{Nn}` vector (solutions of the stationarity
/// system are only determined up to consensus shifts, which the Laplacian
/// annihilates here).
pub fn error_coordinates(
    state: &NetworkState,
    x_bar: &DVector<f64>,
    v_bar: &DVector<f64>,
    g: &Digraph,
) -> ErrorCoordinates {
    let n = state.n_agents();
    let dim = state.dim();
    let l = g.laplacian();
    let mut x_tilde = DVector::zeros(n * dim);
    let mut v_tilde = DVector::zeros(n * dim);
    for i in 0..n {
        x_tilde
            .rows_mut(i * dim, dim)
            .copy_from(&(&state.agents[i].x - x_bar));
        v_tilde
            .rows_mut(i * dim, dim)
            .copy_from(&(&state.agents[i].v - v_bar.rows(i * dim, dim)));
    }
    ErrorCoordinates {
        zeta: laplacian_kron_apply(&l, &x_tilde, dim),
        eta: laplacian_kron_apply(&l, &v_tilde, dim),
        dim,
    }
}
