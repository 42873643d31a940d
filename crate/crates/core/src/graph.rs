//! Directed-graph model, Laplacian construction, and spectral oracles.
//!
//! The convention throughout: `adjacency[(i, j)] = a_ij > 0` means there is an
//! edge from `j` to `i`, i.e. agent `i` receives information from agent `j`.
//! The Laplacian is `l_ii = Σ_j a_ij`, `l_ij = -a_ij`, so every row sums to
//! zero exactly (the diagonal is stored as the sum of the stored off-diagonal
//! magnitudes).
//!
//! For a strongly connected digraph the Laplacian has a one-dimensional left
//! null space spanned by a strictly positive vector `ξ` (normalized here to
//! unit sum). The [`SpectralCertificate`] packages `ξ` together with the three
//! eigenvalue constants used by the convergence analysis:
//!
//! - `λ₂(L̄)`, the second smallest eigenvalue of `L̄ = RL + LᵀR`, `R = diag(ξ)`,
//! - `λ̄_N(LᵀL)`, the largest eigenvalue of `LᵀL`,
//! - `λ̄₂(LᵀL)`, the second smallest eigenvalue of `LᵀL`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Tolerance for "is this eigenvalue/singular value zero" decisions.
pub const NULL_SPACE_TOL: f64 = 1e-9;

/// Tolerance for balance and other residual checks on graph matrices.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("adjacency matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("graph must have at least one node")]
    Empty,

    #[error("negative adjacency weight a[{i}][{j}] = {value}")]
    NegativeWeight { i: usize, j: usize, value: f64 },

    #[error("nonzero diagonal entry a[{i}][{i}] = {value} (self-loops are not allowed)")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("digraph is not strongly connected")]
    NotStronglyConnected,

    #[error("left null space of the Laplacian transpose is not one-dimensional (second singular value {second_sv:.3e}); the digraph is likely disconnected")]
    NullSpaceNotUnique { second_sv: f64 },

    #[error("left eigenvector has a nonpositive entry xi[{i}] = {value:.3e}")]
    NonPositiveEigenvector { i: usize, value: f64 },

    #[error("spectral certificate violated: {name} = {value:.3e} must be positive")]
    NonPositiveSpectralValue { name: &'static str, value: f64 },

    #[error("edge list parse error at line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },

    #[error("failed to read edge list: {0}")]
    Io(#[from] std::io::Error),
}

/// A weighted digraph on `N` nodes given by its adjacency matrix.
///
/// `a_ij > 0` encodes the edge `(j, i)`: information flows from `j` to `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    adjacency: DMatrix<f64>,
}

impl Digraph {
    /// Validates and wraps an adjacency matrix.
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self, GraphError> {
        let (rows, cols) = adjacency.shape();
        if rows != cols {
            return Err(GraphError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(GraphError::Empty);
        }
        for i in 0..rows {
            for j in 0..cols {
                let a = adjacency[(i, j)];
                if a < 0.0 || !a.is_finite() {
                    return Err(GraphError::NegativeWeight { i, j, value: a });
                }
            }
            if adjacency[(i, i)] != 0.0 {
                return Err(GraphError::NonzeroDiagonal {
                    i,
                    value: adjacency[(i, i)],
                });
            }
        }
        Ok(Self { adjacency })
    }

    /// Builds a digraph from `(src, dst, weight)` triples with 0-indexed nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut a = DMatrix::zeros(n, n);
        for &(src, dst, w) in edges {
            a[(dst, src)] = w;
        }
        Self::new(a)
    }

    /// The five-node unbalanced strongly connected benchmark topology with
    /// unit weights: edges 1→2, 2→3, 3→4, 4→5, 2→5, 5→1, 3→1.
    pub fn fig1() -> Self {
        Self::from_edges(
            5,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (1, 4, 1.0),
                (4, 0, 1.0),
                (2, 0, 1.0),
            ],
        )
        .expect("builtin topology is valid")
    }

    /// Parses a plain-text edge list: one `src dst [weight]` triple per line,
    /// nodes 1-indexed, weight defaulting to 1.0. Blank lines and lines
    /// starting with `#` are skipped. The node count is the largest index seen.
    pub fn from_edge_list_str(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse_node = |tok: Option<&str>, what: &str| -> Result<usize, GraphError> {
                let tok = tok.ok_or_else(|| GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("missing {what} node"),
                })?;
                let v: usize = tok.parse().map_err(|_| GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("invalid {what} node `{tok}`"),
                })?;
                if v == 0 {
                    return Err(GraphError::EdgeListParse {
                        line: lineno + 1,
                        reason: "nodes are 1-indexed".into(),
                    });
                }
                Ok(v)
            };
            let src = parse_node(parts.next(), "source")?;
            let dst = parse_node(parts.next(), "destination")?;
            let weight = match parts.next() {
                Some(tok) => tok.parse::<f64>().map_err(|_| GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("invalid weight `{tok}`"),
                })?,
                None => 1.0,
            };
            if parts.next().is_some() {
                return Err(GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: "expected at most three fields per line".into(),
                });
            }
            n = n.max(src).max(dst);
            edges.push((src - 1, dst - 1, weight));
        }
        if n == 0 {
            return Err(GraphError::Empty);
        }
        Self::from_edges(n, &edges)
    }

    /// Loads an edge list from a file; see [`Digraph::from_edge_list_str`].
    pub fn from_edge_list_file<P: AsRef<Path>>(path: P) -> Result<Self, GraphError> {
        Self::from_edge_list_str(&std::fs::read_to_string(path)?)
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// In-neighbors of `i` (edges `j → i`), as `(j, a_ij)` pairs.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.n_agents();
        (0..n).filter_map(move |j| {
            let w = self.adjacency[(i, j)];
            (w > 0.0).then_some((j, w))
        })
    }

    /// Graph Laplacian: `l_ii = Σ_j a_ij`, `l_ij = -a_ij`.
    pub fn laplacian(&self) -> Laplacian {
        let n = self.n_agents();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut degree = 0.0;
            for j in 0..n {
                if i != j {
                    let a = self.adjacency[(i, j)];
                    m[(i, j)] = -a;
                    degree += a;
                }
            }
            m[(i, i)] = degree;
        }
        Laplacian { m }
    }

    /// True iff every node reaches every other node along directed edges.
    ///
    /// Equivalent to: all nodes reachable from node 0 in the graph, and all
    /// nodes reaching node 0 (reachable in the reverse graph).
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n_agents();
        if n == 1 {
            return true;
        }
        // a_ij > 0 is edge j -> i, so forward adjacency out of j is column j.
        let reach = |reverse: bool| -> usize {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    let w = if reverse {
                        self.adjacency[(u, v)] // edge v -> u, walk backwards
                    } else {
                        self.adjacency[(v, u)] // edge u -> v
                    };
                    if w > 0.0 && !seen[v] {
                        seen[v] = true;
                        count += 1;
                        stack.push(v);
                    }
                }
            }
            count
        };
        reach(false) == n && reach(true) == n
    }

    /// True iff `1ᵀL = 0` within tolerance, i.e. in-weights equal out-weights
    /// at every node.
    pub fn is_balanced(&self) -> bool {
        let l = self.laplacian();
        let n = self.n_agents();
        (0..n).all(|j| l.matrix().column(j).sum().abs() <= RESIDUAL_TOL)
    }
}

/// The Laplacian matrix of a digraph. Rows sum to zero exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    m: DMatrix<f64>,
}

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
}

/// Positive unit-sum left null vector of the Laplacian: `ξᵀL = 0`, `Σξ_i = 1`.
///
/// Computed from the null space of `Lᵀ` via a dense SVD; the second smallest
/// singular value must be clearly nonzero or the graph is reported as
/// disconnected.
pub fn left_eigenvector(l: &Laplacian) -> Result<DVector<f64>, GraphError> {
    let n = l.n();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let lt = l.matrix().transpose();
    let scale = l.matrix().abs().max().max(1.0);
    let svd = lt.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("SVD computed with V^T");
    // nalgebra returns singular values in descending order.
    let sv = &svd.singular_values;
    let smallest = sv[n - 1];
    let second = sv[n - 2];
    if smallest > NULL_SPACE_TOL * scale {
        // No null direction at all: not a Laplacian of anything sensible.
        return Err(GraphError::NullSpaceNotUnique { second_sv: smallest });
    }
    if second <= NULL_SPACE_TOL * scale {
        return Err(GraphError::NullSpaceNotUnique { second_sv: second });
    }
    let mut xi = DVector::from_fn(n, |k, _| v_t[(n - 1, k)]);
    let sum = xi.sum();
    if sum < 0.0 {
        xi.neg_mut();
    }
    xi /= xi.sum();
    for i in 0..n {
        if xi[i] <= 0.0 {
            return Err(GraphError::NonPositiveEigenvector { i, value: xi[i] });
        }
    }
    Ok(xi)
}

/// Spectral constants of a strongly connected digraph used by the analysis.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectralCertificate {
    /// Positive unit-sum left eigenvector of the Laplacian zero eigenvalue.
    pub xi: Vec<f64>,
    /// Second smallest eigenvalue of `L̄ = RL + LᵀR`, `R = diag(ξ)`.
    pub lambda2_bar: f64,
    /// Largest eigenvalue of `LᵀL`.
    pub lambda_n_ltl: f64,
    /// Second smallest eigenvalue of `LᵀL`.
    pub lambda2_ltl: f64,
}

impl SpectralCertificate {
    pub fn xi_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.xi)
    }

    pub fn xi_min(&self) -> f64 {
        self.xi.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn sorted_eigenvalues_symmetric(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Computes the spectral certificate for a validated left eigenvector `xi`.
///
/// Fails if `λ₂(L̄) ≤ 0` or `λ̄₂(LᵀL) ≤ 0`, which would contradict strong
/// connectivity.
pub fn spectral_certificate(
    l: &Laplacian,
    xi: &DVector<f64>,
) -> Result<SpectralCertificate, GraphError> {
    let n = l.n();
    let r = DMatrix::from_diagonal(xi);
    let lbar = &r * l.matrix() + l.matrix().transpose() * &r;
    let ltl = l.matrix().transpose() * l.matrix();

    let ev_lbar = sorted_eigenvalues_symmetric(lbar);
    let ev_ltl = sorted_eigenvalues_symmetric(ltl);

    let (lambda2_bar, lambda2_ltl) = if n == 1 {
        // A single node has no disagreement directions; the constants are
        // vacuous and conventionally set to 1 so downstream formulas stay
        // finite.
        (1.0, 1.0)
    } else {
        (ev_lbar[1], ev_ltl[1])
    };
    let lambda_n_ltl = if n == 1 { 1.0 } else { ev_ltl[n - 1] };

    if lambda2_bar <= 0.0 {
        return Err(GraphError::NonPositiveSpectralValue {
            name: "lambda2(Lbar)",
            value: lambda2_bar,
        });
    }
    if lambda2_ltl <= 0.0 {
        return Err(GraphError::NonPositiveSpectralValue {
            name: "lambda2(L^T L)",
            value: lambda2_ltl,
        });
    }
    if lambda_n_ltl <= 0.0 {
        return Err(GraphError::NonPositiveSpectralValue {
            name: "lambdaN(L^T L)",
            value: lambda_n_ltl,
        });
    }

    Ok(SpectralCertificate {
        xi: xi.iter().cloned().collect(),
        lambda2_bar,
        lambda_n_ltl,
        lambda2_ltl,
    })
}

/// Convenience: left eigenvector plus certificate for a strongly connected
/// digraph, rejecting graphs that fail the connectivity assumption.
pub fn certify(g: &Digraph) -> Result<SpectralCertificate, GraphError> {
    if !g.is_strongly_connected() {
        return Err(GraphError::NotStronglyConnected);
    }
    let l = g.laplacian();
    let xi = left_eigenvector(&l)?;
    spectral_certificate(&l, &xi)
}

/// Matrix exponential `exp(-L t)`, used as the oracle for the eigenvector
/// limit `exp(-L t) → 1ξᵀ` and the nonnegativity claims.
pub fn laplacian_heat_kernel(l: &Laplacian, t: f64) -> DMatrix<f64> {
    (-l.matrix() * t).exp()
}

/// One entry of the heat-kernel report: the checks at a single time.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExpCheckAt {
    pub t: f64,
    /// Most negative entry of `exp(-L t)` (should be ≥ -1e-12).
    pub min_entry: f64,
    /// Smallest diagonal entry (should be > 0).
    pub min_diagonal: f64,
    /// `max_ij |exp(-L t) - 1ξᵀ|`.
    pub deviation_from_limit: f64,
    /// Indices of entries violating nonnegativity or positive diagonal.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Report of [`matrix_exponential_limit_check`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExpLimitReport {
    pub checks: Vec<ExpCheckAt>,
    pub entry_tol: f64,
}

impl ExpLimitReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations.is_empty())
    }

    /// Deviation from `1ξᵀ` at the largest sampled time.
    pub fn final_deviation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| (c.t, c.deviation_from_limit))
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, cur| {
                if cur.0 > acc.0 {
                    cur
                } else {
                    acc
                }
            })
            .1
    }
}

/// Verifies, on each `t` in `t_grid`, that `exp(-L t)` is nonnegative with a
/// positive diagonal, and reports the deviation from the limit `1ξᵀ`.
pub fn matrix_exponential_limit_check(
    l: &Laplacian,
    xi: &DVector<f64>,
    t_grid: &[f64],
) -> ExpLimitReport {
    let n = l.n();
    let entry_tol = 1e-12;
    let limit = DVector::from_element(n, 1.0) * xi.transpose();
    let checks = t_grid
        .iter()
        .map(|&t| {
            let e = laplacian_heat_kernel(l, t);
            let mut min_entry = f64::INFINITY;
            let mut min_diagonal = f64::INFINITY;
            let mut deviation = 0.0f64;
            let mut violations = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = e[(i, j)];
                    min_entry = min_entry.min(v);
                    deviation = deviation.max((v - limit[(i, j)]).abs());
                    if v < -entry_tol {
                        violations.push((i, j, v));
                    }
                }
                min_diagonal = min_diagonal.min(e[(i, i)]);
                if e[(i, i)] <= 0.0 {
                    violations.push((i, i, e[(i, i)]));
                }
            }
            ExpCheckAt {
                t,
                min_entry,
                min_diagonal,
                deviation_from_limit: deviation,
                violations,
            }
        })
        .collect();
    ExpLimitReport { checks, entry_tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn fig1_laplacian() -> Laplacian {
        Digraph::fig1().laplacian()
    }

    #[test]
    fn two_node_bidirectional_laplacian() {
        let g = Digraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(
            g.laplacian().matrix(),
            &dmatrix![1.0, -1.0; -1.0, 1.0]
        );
    }

    #[test]
    fn single_node_laplacian_is_zero() {
        let g = Digraph::new(DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(g.laplacian().matrix(), &dmatrix![0.0]);
        assert!(g.is_strongly_connected());
        assert!(g.is_balanced());
    }

    #[test]
    fn fig1_laplacian_rows() {
        let l = fig1_laplacian();
        let expected = dmatrix![
            2.0, 0.0, -1.0, 0.0, -1.0;
            -1.0, 1.0, 0.0, 0.0, 0.0;
            0.0, -1.0, 1.0, 0.0, 0.0;
            0.0, 0.0, -1.0, 1.0, 0.0;
            0.0, -1.0, 0.0, -1.0, 2.0
        ];
        assert_eq!(l.matrix(), &expected);
        for i in 0..5 {
            assert_eq!(l.matrix().row(i).sum(), 0.0);
        }
    }

    #[test]
    fn fig1_is_strongly_connected_and_unbalanced() {
        let g = Digraph::fig1();
        assert!(g.is_strongly_connected());
        assert!(!g.is_balanced());
    }

    #[test]
    fn one_way_pair_is_not_strongly_connected() {
        let g = Digraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert!(!g.is_strongly_connected());
    }

    #[test]
    fn symmetric_cycle_is_balanced() {
        let g = Digraph::from_edges(
            3,
            &[
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 0, 1.0),
                (0, 2, 1.0),
            ],
        )
        .unwrap();
        assert!(g.is_balanced());
        let xi = left_eigenvector(&g.laplacian()).unwrap();
        for i in 0..3 {
            assert!((xi[i] - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_negative_weight_and_self_loop() {
        let a = dmatrix![0.0, -1.0; 1.0, 0.0];
        assert!(matches!(
            Digraph::new(a),
            Err(GraphError::NegativeWeight { .. })
        ));
        let a = dmatrix![0.5, 1.0; 1.0, 0.0];
        assert!(matches!(
            Digraph::new(a),
            Err(GraphError::NonzeroDiagonal { .. })
        ));
    }

    #[test]
    fn two_node_weighted_left_eigenvector_by_hand() {
        // Edges: 1 -> 2 weight 1 (a_21 = 1), 2 -> 1 weight 2 (a_12 = 2).
        // L = [[2, -2], [-1, 1]]; xi^T L = 0 gives xi = (1/3, 2/3).
        let g = Digraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let xi = left_eigenvector(&g.laplacian()).unwrap();
        assert!((xi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((xi[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fig1_left_eigenvector_matches_heat_kernel_limit() {
        // Oracle: rows of exp(-L t) converge to xi^T.
        let l = fig1_laplacian();
        let xi = left_eigenvector(&l).unwrap();
        assert!((xi.sum() - 1.0).abs() < 1e-12);
        let e = laplacian_heat_kernel(&l, 50.0);
        for i in 0..5 {
            for j in 0..5 {
                assert!(
                    (e[(i, j)] - xi[j]).abs() < 1e-8,
                    "row {i} entry {j}: {} vs {}",
                    e[(i, j)],
                    xi[j]
                );
            }
        }
        // Known rational values for the unit-weight benchmark graph.
        let expected = [2.0 / 11.0, 4.0 / 11.0, 3.0 / 11.0, 1.0 / 11.0, 1.0 / 11.0];
        for (i, &want) in expected.iter().enumerate() {
            assert!((xi[i] - want).abs() < 1e-12, "xi[{i}] = {}", xi[i]);
        }
    }

    #[test]
    fn left_eigenvector_rejects_disconnected() {
        // Two isolated bidirectional pairs: null space of L^T is 2-D.
        let g = Digraph::from_edges(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
            .unwrap();
        assert!(!g.is_strongly_connected());
        assert!(matches!(
            left_eigenvector(&g.laplacian()),
            Err(GraphError::NullSpaceNotUnique { .. })
        ));
    }

    #[test]
    fn two_node_certificate_by_hand() {
        // L = [[1,-1],[-1,1]], xi = (1/2, 1/2), Lbar = RL + L^T R = L.
        // Eigenvalues of Lbar: 0 and 2. L^T L has eigenvalues 0 and 4.
        let g = Digraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let l = g.laplacian();
        let xi = left_eigenvector(&l).unwrap();
        let cert = spectral_certificate(&l, &xi).unwrap();
        assert!((cert.lambda2_bar - 2.0).abs() < 1e-12);
        assert!((cert.lambda_n_ltl - 4.0).abs() < 1e-12);
        assert!((cert.lambda2_ltl - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fig1_certificate_positive() {
        let cert = certify(&Digraph::fig1()).unwrap();
        assert!(cert.lambda2_bar > 0.0);
        assert!(cert.lambda_n_ltl > 0.0);
        assert!(cert.lambda2_ltl > 0.0);
        // Smallest eigenvalue of Lbar is 0 (Lbar · 1 = 0).
        let l = fig1_laplacian();
        let r = DMatrix::from_diagonal(&cert.xi_vector());
        let lbar = &r * l.matrix() + l.matrix().transpose() * &r;
        let ones = DVector::from_element(5, 1.0);
        assert!((lbar * ones).abs().max() < 1e-12);
    }

    #[test]
    fn heat_kernel_at_zero_is_identity() {
        let l = fig1_laplacian();
        let e = laplacian_heat_kernel(&l, 0.0);
        assert!((e - DMatrix::<f64>::identity(5, 5)).abs().max() < 1e-14);
    }

    #[test]
    fn exp_limit_check_fig1() {
        let l = fig1_laplacian();
        let xi = left_eigenvector(&l).unwrap();
        let report = matrix_exponential_limit_check(&l, &xi, &[0.0, 0.5, 2.0, 10.0, 50.0]);
        assert!(report.passed());
        assert!(report.final_deviation() < 1e-8);
    }

    #[test]
    fn exp_limit_check_balanced_cycle_uniform() {
        let g = Digraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
            .unwrap();
        let l = g.laplacian();
        let xi = left_eigenvector(&l).unwrap();
        let report = matrix_exponential_limit_check(&l, &xi, &[60.0]);
        assert!(report.passed());
        let e = laplacian_heat_kernel(&l, 60.0);
        for i in 0..4 {
            for j in 0..4 {
                assert!((e[(i, j)] - 0.25).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# benchmark graph\n1 2\n2 3 1.0\n3 1 0.5\n\n";
        let g = Digraph::from_edge_list_str(text).unwrap();
        assert_eq!(g.n_agents(), 3);
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(0, 2), 0.5);
        assert!(g.is_strongly_connected());

        assert!(matches!(
            Digraph::from_edge_list_str("1 2 x"),
            Err(GraphError::EdgeListParse { line: 1, .. })
        ));
        assert!(matches!(
            Digraph::from_edge_list_str("0 2"),
            Err(GraphError::EdgeListParse { .. })
        ));
        assert!(matches!(
            Digraph::from_edge_list_str("# nothing\n"),
            Err(GraphError::Empty)
        ));
    }
}
