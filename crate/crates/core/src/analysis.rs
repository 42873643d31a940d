//! Convergence certificates and proof-derived diagnostics.
//!
//! Three layers:
//!
//! 1. **Stationarity**: [`stationary_pair`] constructs `(x̄, v̄)` with
//!    `x̄ = 1⊗s*` (the centralized oracle's minimizer) and `v̄` the
//!    minimum-norm solution of `(L⊗I) v̄ = -(R⁻¹⊗I) ∇f̃(x̄)`. The rebalanced
//!    stacked field must vanish there ([`unperturbed_stacked_residual`]).
//! 2. **Trajectory metrics**: consensus spread, optimality residual at the
//!    `ξ`-weighted mean, distance to the oracle, eigenvector-learning error,
//!    packaged per record into a [`ConvergenceReport`].
//! 3. **Lyapunov certificate**: the constants of the stability argument
//!    ([`lyapunov_constants`]), the candidate function
//!
//!    ```text
//!    V = ½Σ(σ_i-σ₀)² + ½Σξ_i(2σ_i+ρ_i)ζ_iᵀζ_i + ε·½(ζ+η)ᵀ(R⊗I)(ζ+η),
//!    ε = 33Nλ̄_N/λ₂²,  ρ_i = ζ_iᵀζ_i,
//!    ```
//!
//!    and a sampled check that `V̇ ≤ -‖ζ‖² - (17Nλ̄_N/4λ₂)‖η‖²` along the
//!    *rebalanced* flow (`1/w_i^i` replaced by `1/ξ_i`, which removes the
//!    vanishing perturbation). `V̇` is estimated by central differences of `V`
//!    along a short high-accuracy RK4 integration; the `V₁` contribution is
//!    evaluated in factored form `½(σ⁺-σ⁻)(σ⁺+σ⁻-2σ₀)` because `σ₀` can be
//!    as large as 1e12 and a naive difference of `V` values would cancel
//!    catastrophically.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::costs::SharedCost;
use crate::dynamics::{laplacian_kron_apply, ErrorCoordinates, NetworkState};
use crate::graph::{Digraph, SpectralCertificate};
use crate::integrator::{rk4_step, Trajectory};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cost {index} declares no Lipschitz hint; the Lyapunov constants need l_hat = max l_i")]
    MissingLipschitzHint { index: usize },

    #[error("w_check = {0} must be positive")]
    NonPositiveWCheck(f64),

    #[error("stationary pair solve failed: {0}")]
    StationarySolve(String),

    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),

    #[error(transparent)]
    Minimize(#[from] crate::costs::MinimizeError),
}

/// Headline convergence metrics of a finished run, with the full series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    /// `max_{i,j} ‖x_i - x_j‖` at the final record.
    pub consensus_error: f64,
    /// `‖Σ_i ∇f_i(x̂)‖` at the final record (`x̂` the ξ-weighted mean).
    pub optimality_residual: f64,
    /// `max_i ‖x_i - s*‖` at the final record.
    pub distance_to_oracle: f64,
    /// `max_i ‖w_i - ξ‖` at the final record.
    pub w_error: f64,
    /// Final adaptive gains.
    pub sigma_final: Vec<f64>,
    /// Per-record time series of all metrics.
    pub series: Vec<MetricsSample>,
}

/// Metrics of one trajectory record.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsSample {
    pub t: f64,
    pub consensus_error: f64,
    pub optimality_residual: f64,
    pub w_error: f64,
    pub distance_to_oracle: f64,
    /// Lyapunov candidate along the (perturbed) trajectory; recorded as a
    /// plot series only — the decrease certificate concerns the rebalanced
    /// flow, not this series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_value: Option<f64>,
}

/// `‖Σ_i ∇f_i(x̂)‖` with `x̂ = Σ_i ξ_i x_i`.
///
/// The ξ-weighting matches the left-eigenvector projection that produces the
/// optimality condition `Σ∇f_i(s*) = 0` at stationary consensus.
pub fn optimality_residual(state: &NetworkState, costs: &[SharedCost], xi: &DVector<f64>) -> f64 {
    let dim = state.dim();
    let mut mean = DVector::zeros(dim);
    for (i, a) in state.agents.iter().enumerate() {
        mean.axpy(xi[i], &a.x, 1.0);
    }
    let mut grad_sum = DVector::zeros(dim);
    for c in costs {
        grad_sum += c.gradient(&mean);
    }
    grad_sum.norm()
}

/// `max_i ‖w_i - ξ‖`.
pub fn w_error(state: &NetworkState, xi: &DVector<f64>) -> f64 {
    state
        .agents
        .iter()
        .map(|a| (&a.w - xi).norm())
        .fold(0.0, f64::max)
}

/// `max_i ‖x_i - s*‖`.
pub fn distance_to_point(state: &NetworkState, s_star: &DVector<f64>) -> f64 {
    state
        .agents
        .iter()
        .map(|a| (&a.x - s_star).norm())
        .fold(0.0, f64::max)
}

/// The stationary pair of the rebalanced dynamics.
#[derive(Debug, Clone)]
pub struct StationaryPair {
    /// The consensus point `s*` (each agent's block of `x̄ = 1⊗s*`).
    pub s_star: DVector<f64>,
    /// Stacked `v̄ ∈ R^{Nn}`: minimum-norm solution of
    /// `(L⊗I) v̄ = -(R⁻¹⊗I) ∇f̃(1⊗s*)`.
    pub v_bar: DVector<f64>,
    /// Max-abs residual of the linear solve (nonzero exactly to the extent
    /// that `Σ∇f_i(s*) ≠ 0`).
    pub solve_residual: f64,
}

/// Solves for `v̄` given the oracle minimizer `s_star`.
pub fn stationary_pair(
    g: &Digraph,
    costs: &[SharedCost],
    xi: &DVector<f64>,
    s_star: &DVector<f64>,
) -> Result<StationaryPair, AnalysisError> {
    let n = g.n_agents();
    let dim = s_star.len();
    let l = g.laplacian();
    let mut rhs = DVector::zeros(n * dim);
    for i in 0..n {
        let gi = costs[i].gradient(s_star);
        rhs.rows_mut(i * dim, dim).copy_from(&(-&gi / xi[i]));
    }
    let scale = l.matrix().abs().max().max(1.0);
    let pinv = l
        .matrix()
        .clone()
        .svd(true, true)
        .pseudo_inverse(1e-13 * scale)
        .map_err(|e| AnalysisError::StationarySolve(e.to_string()))?;
    // v̄ = (L⁺ ⊗ I) rhs, applied blockwise.
    let mut v_bar = DVector::zeros(n * dim);
    for i in 0..n {
        let mut block = DVector::zeros(dim);
        for j in 0..n {
            let pij = pinv[(i, j)];
            if pij != 0.0 {
                block.axpy(pij, &rhs.rows(j * dim, dim).into_owned(), 1.0);
            }
        }
        v_bar.rows_mut(i * dim, dim).copy_from(&block);
    }
    let solve_residual = (laplacian_kron_apply(&l, &v_bar, dim) - &rhs).abs().max();
    Ok(StationaryPair {
        s_star: s_star.clone(),
        v_bar,
        solve_residual,
    })
}

/// Evaluates the stacked rebalanced field (`1/w_i^i` replaced by `1/ξ_i`)
/// at `(x̄ = 1⊗s*, v̄)` using dense Kronecker products, returning the max-abs
/// entry over `(ẋ, v̇)`. Vanishes at the stationary pair.
pub fn unperturbed_stacked_residual(
    g: &Digraph,
    costs: &[SharedCost],
    xi: &DVector<f64>,
    pair: &StationaryPair,
    sigmas: &[f64],
) -> f64 {
    let n = g.n_agents();
    let dim = pair.s_star.len();
    let l = g.laplacian();
    let eye = DMatrix::identity(dim, dim);

    let mut x_bar = DVector::zeros(n * dim);
    for i in 0..n {
        x_bar.rows_mut(i * dim, dim).copy_from(&pair.s_star);
    }
    let mut grad_stack = DVector::zeros(n * dim);
    for i in 0..n {
        grad_stack
            .rows_mut(i * dim, dim)
            .copy_from(&costs[i].gradient(&pair.s_star));
    }

    let lk = l.matrix().kronecker(&eye);
    let e_stack = &lk * &x_bar;
    let mut cb = DMatrix::zeros(n, n);
    for i in 0..n {
        let rho = e_stack.rows(i * dim, dim).norm_squared();
        cb[(i, i)] = sigmas[i] + rho;
    }
    let r_inv_k =
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / xi[i] } else { 0.0 }).kronecker(&eye);
    let cbl_k = (&cb * l.matrix()).kronecker(&eye);

    let dx = -(&r_inv_k * &grad_stack) - &cbl_k * &x_bar - &lk * &pair.v_bar;
    let dv = &cbl_k * &x_bar;
    dx.abs().max().max(dv.abs().max())
}

/// The constants of the stability argument's Lyapunov certificate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LyapunovConstants {
    pub omega1: f64,
    pub omega2: f64,
    /// `σ₀ = 1 + ω₁ + ω₂ + N/(2λ₂)` — the certificate offset for the
    /// rebalanced (unperturbed) flow.
    pub sigma_zero: f64,
    /// `ε = 33Nλ̄_N/λ₂²` — the `V₃` weight.
    pub epsilon: f64,
    /// `ϱ = 4N/λ₂ + ε(8+λ₂)/(4λ₂)` — the ISS input gain.
    pub varrho: f64,
    /// `κ = min{Nλ̄_N/(8λ₂), 1}` — the ISS decay constant.
    pub kappa: f64,
    /// `l̂ = max_i l_i`, the largest declared gradient Lipschitz bound.
    pub l_hat: f64,
    /// `w̌`, the infimum of `w_i^i` used in `ω₂` (equals `min ξ_i` for the
    /// rebalanced certificate).
    pub w_check: f64,
}

/// Plugs the spectral certificate and Lipschitz bounds into the closed-form
/// constants:
///
/// ```text
/// ω₁ = 33Nλ̄_N(λ₂ + 2λ̄_N)/λ₂³
/// ω₂ = (l̂²/λ̄₂)(4Nλ̄_N/(λ₂w̌²) + 17Nλ̄_N²(8+λ₂)/(4λ₂³w̌²))
/// σ₀ = 1 + ω₁ + ω₂ + N/(2λ₂)
/// ```
pub fn lyapunov_constants(
    cert: &SpectralCertificate,
    costs: &[SharedCost],
    w_check: f64,
) -> Result<LyapunovConstants, AnalysisError> {
    if w_check <= 0.0 {
        return Err(AnalysisError::NonPositiveWCheck(w_check));
    }
    let mut l_hat = 0.0f64;
    for (index, c) in costs.iter().enumerate() {
        let hint = c
            .lipschitz_hint()
            .ok_or(AnalysisError::MissingLipschitzHint { index })?;
        l_hat = l_hat.max(hint);
    }
    let n = cert.xi.len() as f64;
    let lam2 = cert.lambda2_bar;
    let lam_n = cert.lambda_n_ltl;
    let lam2_ltl = cert.lambda2_ltl;

    let omega1 = 33.0 * n * lam_n * (lam2 + 2.0 * lam_n) / lam2.powi(3);
    let omega2 = (l_hat * l_hat / lam2_ltl)
        * (4.0 * n * lam_n / (lam2 * w_check * w_check)
            + 17.0 * n * lam_n * lam_n * (8.0 + lam2) / (4.0 * lam2.powi(3) * w_check * w_check));
    let sigma_zero = 1.0 + omega1 + omega2 + n / (2.0 * lam2);
    let epsilon = 33.0 * n * lam_n / (lam2 * lam2);
    let varrho = 4.0 * n / lam2 + epsilon * (8.0 + lam2) / (4.0 * lam2);
    let kappa = (n * lam_n / (8.0 * lam2)).min(1.0);

    Ok(LyapunovConstants {
        omega1,
        omega2,
        sigma_zero,
        epsilon,
        varrho,
        kappa,
        l_hat,
        w_check,
    })
}

/// The candidate `V = V₁ + V₂ + ε·V₃` (see module docs).
pub fn lyapunov_value(
    ec: &ErrorCoordinates,
    sigmas: &[f64],
    xi: &DVector<f64>,
    sigma_zero: f64,
    cert: &SpectralCertificate,
) -> f64 {
    let n = xi.len();
    let epsilon = 33.0 * (n as f64) * cert.lambda_n_ltl / (cert.lambda2_bar * cert.lambda2_bar);
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    let mut v3 = 0.0;
    for i in 0..n {
        let ds = sigmas[i] - sigma_zero;
        v1 += 0.5 * ds * ds;
        let rho = ec.zeta_block(i).norm_squared();
        v2 += 0.5 * xi[i] * (2.0 * sigmas[i] + rho) * rho;
        let ze = ec.zeta_block(i) + ec.eta_block(i);
        v3 += 0.5 * xi[i] * ze.norm_squared();
    }
    v1 + v2 + epsilon * v3
}

/// Options for [`lyapunov_decrease_check`].
#[derive(Debug, Clone)]
pub struct DecreaseCheckOptions {
    /// Central-difference half-width along the flow.
    pub delta: f64,
    /// Slack is `slack_coeff · (1 + |V̇|)`, covering discretization error.
    pub slack_coeff: f64,
}

impl Default for DecreaseCheckOptions {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            slack_coeff: 1e-4,
        }
    }
}

/// One sampled state's decrease-check outcome.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecreaseSample {
    pub index: usize,
    pub v_dot: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    /// Dump of the violating state (x, v, σ per agent), present on failures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_dump: Option<String>,
}

/// Report of [`lyapunov_decrease_check`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecreaseReport {
    pub checked: usize,
    pub violations: usize,
    pub samples: Vec<DecreaseSample>,
}

impl DecreaseReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct UnperturbedFlow<'a> {
    l: crate::graph::Laplacian,
    xi: &'a DVector<f64>,
    costs: &'a [SharedCost],
    s_star: &'a DVector<f64>,
    grads_at_star: Vec<DVector<f64>>,
    n: usize,
    dim: usize,
}

impl<'a> UnperturbedFlow<'a> {
    fn new(
        g: &Digraph,
        costs: &'a [SharedCost],
        xi: &'a DVector<f64>,
        s_star: &'a DVector<f64>,
    ) -> Self {
        let grads_at_star = costs.iter().map(|c| c.gradient(s_star)).collect();
        Self {
            l: g.laplacian(),
            xi,
            costs,
            s_star,
            grads_at_star,
            n: g.n_agents(),
            dim: s_star.len(),
        }
    }

    fn pack(&self, x_tilde: &DVector<f64>, v_tilde: &DVector<f64>, sigmas: &[f64]) -> DVector<f64> {
        let nd = self.n * self.dim;
        let mut y = DVector::zeros(2 * nd + self.n);
        y.rows_mut(0, nd).copy_from(x_tilde);
        y.rows_mut(nd, nd).copy_from(v_tilde);
        for i in 0..self.n {
            y[2 * nd + i] = sigmas[i];
        }
        y
    }

    /// `(ζ blocks, σ slice)` views of a packed state.
    fn zeta_of(&self, y: &DVector<f64>) -> DVector<f64> {
        laplacian_kron_apply(&self.l, &y.rows(0, self.n * self.dim).into_owned(), self.dim)
    }

    fn eta_of(&self, y: &DVector<f64>) -> DVector<f64> {
        let nd = self.n * self.dim;
        laplacian_kron_apply(&self.l, &y.rows(nd, nd).into_owned(), self.dim)
    }

    /// Rebalanced error dynamics: perturbation-free because the weight matrix
    /// is pinned at `R`.
    fn field(&self, y: &DVector<f64>) -> DVector<f64> {
        let nd = self.n * self.dim;
        let x_tilde = y.rows(0, nd).into_owned();
        let v_tilde = y.rows(nd, nd).into_owned();
        let zeta = laplacian_kron_apply(&self.l, &x_tilde, self.dim);
        let lv = laplacian_kron_apply(&self.l, &v_tilde, self.dim);
        let mut out = DVector::zeros(y.len());
        for i in 0..self.n {
            let zi = zeta.rows(i * self.dim, self.dim);
            let rho = zi.norm_squared();
            let gain = y[2 * nd + i] + rho;
            let xi_abs = self.s_star + x_tilde.rows(i * self.dim, self.dim);
            let h_i = self.costs[i].gradient(&xi_abs) - &self.grads_at_star[i];
            let dx = -(&h_i / self.xi[i]) - zi * gain - lv.rows(i * self.dim, self.dim);
            out.rows_mut(i * self.dim, self.dim).copy_from(&dx);
            out.rows_mut(nd + i * self.dim, self.dim)
                .copy_from(&(zi * gain));
            out[2 * nd + i] = rho;
        }
        out
    }

    /// `V(y⁺) - V(y⁻)` evaluated in factored form (cancellation-safe in the
    /// `V₁` term, whose offset `σ₀` dwarfs everything else).
    fn v_difference(&self, y_plus: &DVector<f64>, y_minus: &DVector<f64>, consts: &LyapunovConstants) -> f64 {
        let nd = self.n * self.dim;
        let zp = self.zeta_of(y_plus);
        let zm = self.zeta_of(y_minus);
        let ep = self.eta_of(y_plus);
        let em = self.eta_of(y_minus);
        let mut dv1 = 0.0;
        let mut dv2 = 0.0;
        let mut dv3 = 0.0;
        for i in 0..self.n {
            let sp = y_plus[2 * nd + i];
            let sm = y_minus[2 * nd + i];
            dv1 += 0.5 * (sp - sm) * ((sp - consts.sigma_zero) + (sm - consts.sigma_zero));
            let rp = zp.rows(i * self.dim, self.dim).norm_squared();
            let rm = zm.rows(i * self.dim, self.dim).norm_squared();
            dv2 += 0.5 * self.xi[i] * ((2.0 * sp + rp) * rp - (2.0 * sm + rm) * rm);
            let zep = zp.rows(i * self.dim, self.dim) + ep.rows(i * self.dim, self.dim);
            let zem = zm.rows(i * self.dim, self.dim) + em.rows(i * self.dim, self.dim);
            dv3 += 0.5 * self.xi[i] * (zep.norm_squared() - zem.norm_squared());
        }
        dv1 + dv2 + consts.epsilon * dv3
    }
}

/// Checks the terminal decrease bound `V̇ ≤ -‖ζ‖² - (17Nλ̄_N/4λ₂)‖η‖²` of the
/// rebalanced flow on each sampled state, within
/// `slack = slack_coeff·(1+|V̇|)`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_decrease_check(
    samples: &[NetworkState],
    pair: &StationaryPair,
    g: &Digraph,
    costs: &[SharedCost],
    cert: &SpectralCertificate,
    consts: &LyapunovConstants,
    opts: &DecreaseCheckOptions,
) -> DecreaseReport {
    let xi = cert.xi_vector();
    let flow = UnperturbedFlow::new(g, costs, &xi, &pair.s_star);
    let n = g.n_agents();
    let lam2 = cert.lambda2_bar;
    let lam_n = cert.lambda_n_ltl;
    let eta_coeff = 17.0 * (n as f64) * lam_n / (4.0 * lam2);

    let mut out = Vec::with_capacity(samples.len());
    let mut violations = 0;
    for (index, state) in samples.iter().enumerate() {
        let dim = state.dim();
        let mut x_tilde = DVector::zeros(n * dim);
        let mut v_tilde = DVector::zeros(n * dim);
        let mut sigmas = vec![0.0; n];
        for (i, a) in state.agents.iter().enumerate() {
            x_tilde
                .rows_mut(i * dim, dim)
                .copy_from(&(&a.x - &pair.s_star));
            v_tilde
                .rows_mut(i * dim, dim)
                .copy_from(&(&a.v - pair.v_bar.rows(i * dim, dim)));
            sigmas[i] = a.sigma;
        }
        let y0 = flow.pack(&x_tilde, &v_tilde, &sigmas);

        let mut f = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>, crate::integrator::FieldFault> {
            Ok(flow.field(y))
        };
        let y_plus = rk4_step(&mut f, 0.0, &y0, opts.delta).expect("flow is total");
        let y_minus = rk4_step(&mut f, 0.0, &y0, -opts.delta).expect("flow is total");
        let v_dot = flow.v_difference(&y_plus, &y_minus, consts) / (2.0 * opts.delta);

        let zeta = flow.zeta_of(&y0);
        let eta = flow.eta_of(&y0);
        let bound = -zeta.norm_squared() - eta_coeff * eta.norm_squared();
        let slack = opts.slack_coeff * (1.0 + v_dot.abs());
        let pass = v_dot <= bound + slack;
        if !pass {
            violations += 1;
        }
        out.push(DecreaseSample {
            index,
            v_dot,
            bound,
            slack,
            pass,
            state_dump: (!pass).then(|| format!("{state:?}")),
        });
    }
    DecreaseReport {
        checked: samples.len(),
        violations,
        samples: out,
    }
}

/// Draws `count` states around the stationary pair: `x_i = s* + U[-scale,scale]ⁿ`,
/// `v_i = v̄_i + U[-scale,scale]ⁿ`, `σ_i ~ U[σ_lo, σ_hi]`, `w_i = ξ`.
pub fn sample_states_near(
    rng: &mut impl Rng,
    pair: &StationaryPair,
    xi: &DVector<f64>,
    scale: f64,
    sigma_range: (f64, f64),
    count: usize,
) -> Vec<NetworkState> {
    let n = xi.len();
    let dim = pair.s_star.len();
    (0..count)
        .map(|_| {
            let agents = (0..n)
                .map(|i| crate::dynamics::AgentState {
                    x: DVector::from_fn(dim, |k, _| {
                        pair.s_star[k] + rng.gen_range(-scale..=scale)
                    }),
                    v: DVector::from_fn(dim, |k, _| {
                        pair.v_bar[i * dim + k] + rng.gen_range(-scale..=scale)
                    }),
                    w: xi.clone(),
                    sigma: rng.gen_range(sigma_range.0..=sigma_range.1),
                })
                .collect();
            NetworkState { agents, time: 0.0 }
        })
        .collect()
}

/// Computes the metrics series and headline report for a finished trajectory.
pub fn convergence_report(
    traj: &Trajectory,
    layout: crate::dynamics::StateLayout,
    costs: &[SharedCost],
    s_star: &DVector<f64>,
    xi: &DVector<f64>,
    lyapunov: Option<(&StationaryPair, &LyapunovConstants, &SpectralCertificate, &Digraph)>,
) -> ConvergenceReport {
    let series: Vec<MetricsSample> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, flat)| {
            let state = layout.unpack(flat, t);
            let lyapunov_value = lyapunov.map(|(pair, consts, cert, g)| {
                let ec = crate::dynamics::error_coordinates(&state, &pair.s_star, &pair.v_bar, g);
                let sigmas: Vec<f64> = state.agents.iter().map(|a| a.sigma).collect();
                lyapunov_value(&ec, &sigmas, xi, consts.sigma_zero, cert)
            });
            MetricsSample {
                t,
                consensus_error: state.consensus_spread(),
                optimality_residual: optimality_residual(&state, costs, xi),
                w_error: w_error(&state, xi),
                distance_to_oracle: distance_to_point(&state, s_star),
                lyapunov_value,
            }
        })
        .collect();

    let final_state = layout.unpack(&traj.final_state, traj.final_time);
    ConvergenceReport {
        consensus_error: final_state.consensus_spread(),
        optimality_residual: optimality_residual(&final_state, costs, xi),
        distance_to_oracle: distance_to_point(&final_state, s_star),
        w_error: w_error(&final_state, xi),
        sigma_final: final_state.agents.iter().map(|a| a.sigma).collect(),
        series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{example1_costs, Quadratic, SharedCost};
    use crate::dynamics::initial_state;
    use crate::graph::certify;
    use nalgebra::dvector;
    use std::sync::Arc;

    fn example1_setup() -> (Digraph, Vec<SharedCost>, SpectralCertificate) {
        let g = Digraph::fig1();
        let cert = certify(&g).unwrap();
        (g, example1_costs(), cert)
    }

    #[test]
    fn constants_unit_plugin() {
        // All spectral quantities = 1, N = 1, l_hat = 1, w_check = 1:
        // omega1 = 33·1·1·(1+2)/1 = 99, epsilon = 33,
        // omega2 = 4 + 17·9/4 = 42.25, sigma0 = 1 + 99 + 42.25 + 0.5.
        let cert = SpectralCertificate {
            xi: vec![1.0],
            lambda2_bar: 1.0,
            lambda_n_ltl: 1.0,
            lambda2_ltl: 1.0,
        };
        let costs: Vec<SharedCost> = vec![Arc::new(Quadratic::new(0.5, dvector![0.0]))];
        let c = lyapunov_constants(&cert, &costs, 1.0).unwrap();
        assert_eq!(c.omega1, 99.0);
        assert_eq!(c.epsilon, 33.0);
        assert!((c.omega2 - 42.25).abs() < 1e-12);
        assert!((c.sigma_zero - 142.75).abs() < 1e-12);
        assert!((c.varrho - (4.0 + 33.0 * 9.0 / 4.0)).abs() < 1e-12);
        assert_eq!(c.kappa, 0.125);
        assert!(c.sigma_zero > c.omega1 + c.omega2);
    }

    #[test]
    fn constants_reject_missing_hint() {
        struct NoHint;
        impl crate::costs::Cost for NoHint {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &DVector<f64>) -> f64 {
                0.0
            }
            fn gradient(&self, _: &DVector<f64>) -> DVector<f64> {
                dvector![0.0]
            }
        }
        let cert = SpectralCertificate {
            xi: vec![1.0],
            lambda2_bar: 1.0,
            lambda_n_ltl: 1.0,
            lambda2_ltl: 1.0,
        };
        let costs: Vec<SharedCost> = vec![Arc::new(NoHint)];
        assert!(matches!(
            lyapunov_constants(&cert, &costs, 1.0),
            Err(AnalysisError::MissingLipschitzHint { index: 0 })
        ));
        let costs: Vec<SharedCost> = vec![Arc::new(Quadratic::new(1.0, dvector![0.0]))];
        assert!(matches!(
            lyapunov_constants(&cert, &costs, 0.0),
            Err(AnalysisError::NonPositiveWCheck(_))
        ));
    }

    #[test]
    fn fig1_constants_positive_finite() {
        let (_, costs, cert) = example1_setup();
        let c = lyapunov_constants(&cert, &costs, cert.xi_min()).unwrap();
        for v in [c.omega1, c.omega2, c.sigma_zero, c.epsilon, c.varrho, c.kappa] {
            assert!(v.is_finite() && v > 0.0, "constant {v} not positive finite");
        }
    }

    #[test]
    fn lyapunov_value_zero_iff_at_certificate_origin() {
        let (g, _costs, cert) = example1_setup();
        let xi = cert.xi_vector();
        let consts_sigma0 = 3.7;
        // zeta = eta = 0, sigma = sigma0 -> V = 0.
        let xs = vec![dvector![1.0, 2.0]; 5];
        let vs = vec![dvector![0.5, -0.5]; 5];
        let st = initial_state(xs, vs, &[consts_sigma0; 5]).unwrap();
        let ec = crate::dynamics::error_coordinates(
            &st,
            &dvector![1.0, 2.0],
            &DVector::zeros(10),
            &g,
        );
        let sigmas = vec![consts_sigma0; 5];
        let v = lyapunov_value(&ec, &sigmas, &xi, consts_sigma0, &cert);
        assert_eq!(v, 0.0);

        // sigma != sigma0 with zeta = eta = 0 -> V = V1 only.
        let sigmas2 = vec![consts_sigma0 + 2.0; 5];
        let v2 = lyapunov_value(&ec, &sigmas2, &xi, consts_sigma0, &cert);
        assert!((v2 - 5.0 * 0.5 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_value_positive_on_random_states() {
        let (g, _costs, cert) = example1_setup();
        let xi = cert.xi_vector();
        let mut rng = rand_chacha_rng(7);
        for _ in 0..20 {
            let xs: Vec<DVector<f64>> = (0..5)
                .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let vs: Vec<DVector<f64>> = (0..5)
                .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let sigmas: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..4.0)).collect();
            let st = initial_state(xs, vs, &[1.0; 5]).unwrap();
            let ec = crate::dynamics::error_coordinates(
                &st,
                &dvector![0.0, 0.0],
                &DVector::zeros(10),
                &g,
            );
            let v = lyapunov_value(&ec, &sigmas, &xi, 1.5, &cert);
            assert!(v > 0.0);
        }
    }

    fn rand_chacha_rng(seed: u64) -> rand_chacha::ChaCha12Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn stationary_pair_zeroes_the_rebalanced_field() {
        let (g, costs, cert) = example1_setup();
        let xi = cert.xi_vector();
        let starts = crate::costs::grid_starts(-10.0, 10.0, 5, 2);
        let global = crate::costs::global_cost(&costs).unwrap();
        let s_star = crate::costs::centralized_minimizer(
            &global,
            &starts,
            &crate::costs::MinimizeOptions::default(),
        )
        .unwrap();
        let pair = stationary_pair(&g, &costs, &xi, &s_star).unwrap();
        assert!(pair.solve_residual < 1e-9, "solve residual {}", pair.solve_residual);
        let res = unperturbed_stacked_residual(&g, &costs, &xi, &pair, &[1.0; 5]);
        assert!(res < 1e-9, "stacked field residual {res}");
    }

    #[test]
    fn optimality_residual_single_agent_quadratic_minimum() {
        let costs: Vec<SharedCost> = vec![Arc::new(Quadratic::new(2.0, dvector![3.0, 5.0]))];
        let st = initial_state(vec![dvector![3.0, 5.0]], vec![dvector![0.0, 0.0]], &[1.0]).unwrap();
        let xi = dvector![1.0];
        assert_eq!(optimality_residual(&st, &costs, &xi), 0.0);
    }

    #[test]
    fn decrease_check_passes_at_origin_and_near_it() {
        let (g, costs, cert) = example1_setup();
        let xi = cert.xi_vector();
        let global = crate::costs::global_cost(&costs).unwrap();
        let s_star = crate::costs::centralized_minimizer(
            &global,
            &crate::costs::grid_starts(-10.0, 10.0, 5, 2),
            &crate::costs::MinimizeOptions::default(),
        )
        .unwrap();
        let pair = stationary_pair(&g, &costs, &xi, &s_star).unwrap();
        let consts = lyapunov_constants(&cert, &costs, cert.xi_min()).unwrap();

        // Exact origin: zeta = eta = 0, sigma = sigma0 -> V̇ = 0, bound 0.
        let origin = {
            let xs = vec![s_star.clone(); 5];
            let vs: Vec<DVector<f64>> =
                (0..5).map(|i| pair.v_bar.rows(i * 2, 2).into_owned()).collect();
            let mut st = initial_state(xs, vs, &[consts.sigma_zero; 5]).unwrap();
            for a in st.agents.iter_mut() {
                a.w = xi.clone();
            }
            st
        };
        let report = lyapunov_decrease_check(
            &[origin],
            &pair,
            &g,
            &costs,
            &cert,
            &consts,
            &DecreaseCheckOptions::default(),
        );
        assert!(report.passed());
        assert!(report.samples[0].v_dot.abs() < 1e-9);

        let mut rng = rand_chacha_rng(11);
        let samples = sample_states_near(&mut rng, &pair, &xi, 0.5, (0.5, 3.0), 50);
        let report = lyapunov_decrease_check(
            &samples,
            &pair,
            &g,
            &costs,
            &cert,
            &consts,
            &DecreaseCheckOptions::default(),
        );
        assert!(report.passed(), "violations: {}", report.violations);
    }

    #[test]
    fn decrease_check_flags_zero_sigma0_control() {
        let (g, costs, cert) = example1_setup();
        let xi = cert.xi_vector();
        let global = crate::costs::global_cost(&costs).unwrap();
        let s_star = crate::costs::centralized_minimizer(
            &global,
            &crate::costs::grid_starts(-10.0, 10.0, 5, 2),
            &crate::costs::MinimizeOptions::default(),
        )
        .unwrap();
        let pair = stationary_pair(&g, &costs, &xi, &s_star).unwrap();
        let mut consts = lyapunov_constants(&cert, &costs, cert.xi_min()).unwrap();
        consts.sigma_zero = 0.0;

        let mut rng = rand_chacha_rng(13);
        let samples = sample_states_near(&mut rng, &pair, &xi, 0.5, (0.5, 3.0), 100);
        let report = lyapunov_decrease_check(
            &samples,
            &pair,
            &g,
            &costs,
            &cert,
            &consts,
            &DecreaseCheckOptions::default(),
        );
        assert!(
            report.violations >= 1,
            "negative control should produce violations"
        );
        assert!(report.samples.iter().any(|s| s.state_dump.is_some()));
    }
}
