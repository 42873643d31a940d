//! Simulation and verification library for a fully distributed adaptive
//! continuous-time optimization flow over unbalanced strongly connected
//! digraphs.
//!
//! `N` agents, each owning a private cost `f_i : R^n → R`, jointly minimize
//! `f(s) = Σ_i f_i(s)` by exchanging state along directed edges only. Each
//! agent integrates
//!
//! ```text
//! ẋ_i = -∇f_i(x_i)/w_i^i - (σ_i + ρ_i) e_i - Σ_j a_ij (v_i - v_j)
//! v̇_i = (σ_i + ρ_i) e_i
//! ẇ_i = -Σ_j a_ij (w_i - w_j)
//! σ̇_i = e_iᵀ e_i,          e_i = Σ_j a_ij (x_i - x_j),   ρ_i = e_iᵀ e_i
//! ```
//!
//! with `w_i(0)` the i-th standard basis vector and `σ_i(0) > 0`. The
//! `w`-dynamics learn the Laplacian left eigenvector online, which rebalances
//! the gradient flow on unbalanced topologies without any global knowledge;
//! the adaptive gains `σ_i, ρ_i` replace spectral constants.
//!
//! The crate is organized around the moving parts of that statement:
//!
//! - [`graph`]: digraphs, Laplacians, strong connectivity, and the spectral
//!   oracles (left eigenvector, eigenvalue certificate, heat-kernel limit).
//! - [`costs`]: the cost-function abstraction, the benchmark cost library,
//!   Huber losses for robust estimation, finite-difference gradient checking,
//!   and the centralized multi-start minimizer used as the ground-truth
//!   oracle.
//! - [`dynamics`]: network state, the per-agent vector field, and the error
//!   coordinates `ζ, η` used in diagnostics.
//! - [`integrator`]: deterministic fixed-step RK4 with fault-driven step
//!   halving, producing [`integrator::Trajectory`] records.
//! - [`analysis`]: convergence reports, stationary-pair construction, and the
//!   Lyapunov certificate machinery (constants, value, sampled decrease
//!   check).
//! - [`experiment`]: experiment configuration, the two built-in benchmark
//!   experiments, synthetic sensor data generation, and CSV/JSON export.

pub mod analysis;
pub mod costs;
pub mod dynamics;
pub mod experiment;
pub mod graph;
pub mod integrator;

pub use graph::{Digraph, Laplacian, SpectralCertificate};
