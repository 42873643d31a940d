//! Centralized minimizer used as the ground-truth oracle for the stationary
//! consensus point.
//!
//! Two phases per start: Armijo-backtracking gradient descent into a basin,
//! then a damped Newton polish on a finite-difference Hessian down to the
//! gradient-norm target. Multi-start from a grid guards against nonconvex
//! locals; the best converged point by value wins.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::Cost;

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("no start points supplied")]
    NoStarts,

    #[error("gradient descent did not reach |grad| < {tol:.3e} from any start; best residual {best:.3e}")]
    DidNotConverge { tol: f64, best: f64 },

    #[error("non-finite value or gradient encountered at {at:?}")]
    NonFinite { at: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Target gradient norm.
    pub tol: f64,
    /// Iteration cap for the descent phase of each start.
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Backtracking shrink factor.
    pub shrink: f64,
    /// Initial trial step.
    pub step0: f64,
    /// Gradient norm at which the Newton polish takes over.
    pub polish_at: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 20_000,
            armijo_c: 1e-4,
            shrink: 0.5,
            step0: 1.0,
            polish_at: 1e-5,
        }
    }
}

/// Uniform grid of start points: `per_axis` points per coordinate spanning
/// `[lo, hi]^dim`. Intended for desk-scale dims (the grid has
/// `per_axis^dim` points).
pub fn grid_starts(lo: f64, hi: f64, per_axis: usize, dim: usize) -> Vec<DVector<f64>> {
    assert!(per_axis >= 1);
    let coords: Vec<f64> = if per_axis == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..per_axis)
            .map(|k| lo + (hi - lo) * (k as f64) / ((per_axis - 1) as f64))
            .collect()
    };
    let total = per_axis.pow(dim as u32);
    let mut starts = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut p = DVector::zeros(dim);
        for d in 0..dim {
            p[d] = coords[idx % per_axis];
            idx /= per_axis;
        }
        starts.push(p);
    }
    starts
}

/// Central-difference Hessian of the gradient, symmetrized.
fn fd_hessian(f: &dyn Cost, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let dim = x.len();
    let mut hess = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut p = x.clone();
        let mut m = x.clone();
        p[k] += h;
        m[k] -= h;
        let col = (f.gradient(&p) - f.gradient(&m)) / (2.0 * h);
        hess.column_mut(k).copy_from(&col);
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    sym
}

/// Damped Newton iterations accepting only gradient-norm decrease.
fn newton_polish(f: &dyn Cost, x0: DVector<f64>, tol: f64) -> (DVector<f64>, f64) {
    let mut x = x0;
    let mut g = f.gradient(&x);
    let mut gn = g.norm();
    for _ in 0..100 {
        if gn < tol {
            break;
        }
        let hess = fd_hessian(f, &x, 1e-5);
        let step = match hess.clone().lu().solve(&g) {
            Some(s) => s,
            None => break,
        };
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = &x - &step * damping;
            let gc = f.gradient(&cand);
            let gcn = gc.norm();
            if gcn.is_finite() && gcn < gn {
                x = cand;
                g = gc;
                gn = gcn;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, gn)
}

fn descend(
    f: &dyn Cost,
    x0: &DVector<f64>,
    opts: &MinimizeOptions,
) -> Result<(DVector<f64>, f64, f64), MinimizeError> {
    let mut x = x0.clone();
    let mut fx = f.value(&x);
    let mut step = opts.step0;
    let handoff = opts.polish_at.max(opts.tol);
    for _ in 0..opts.max_iters {
        let g = f.gradient(&x);
        let gn = g.norm();
        if !fx.is_finite() || !gn.is_finite() {
            return Err(MinimizeError::NonFinite {
                at: x.iter().cloned().collect(),
            });
        }
        if gn < handoff {
            break;
        }
        // Backtracking line search along -g with a gently growing trial step.
        let mut t = step;
        let g2 = gn * gn;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &x - &g * t;
            let fc = f.value(&cand);
            if fc <= fx - opts.armijo_c * t * g2 {
                x = cand;
                fx = fc;
                step = (t * 2.0).min(opts.step0);
                accepted = true;
                break;
            }
            t *= opts.shrink;
        }
        if !accepted {
            // Stalled at floating-point resolution; let the polish decide.
            break;
        }
    }
    let (x, gn) = newton_polish(f, x, opts.tol);
    let fx = f.value(&x);
    Ok((x, fx, gn))
}

/// Minimizes `f` from every start, returning the best point with
/// `|∇f| < tol`. Errors if no start converges.
pub fn centralized_minimizer(
    f: &dyn Cost,
    starts: &[DVector<f64>],
    opts: &MinimizeOptions,
) -> Result<DVector<f64>, MinimizeError> {
    if starts.is_empty() {
        return Err(MinimizeError::NoStarts);
    }
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut best_residual = f64::INFINITY;
    for x0 in starts {
        let (x, fx, gn) = descend(f, x0, opts)?;
        best_residual = best_residual.min(gn);
        if gn < opts.tol {
            match &best {
                Some((_, fb)) if *fb <= fx => {}
                _ => best = Some((x, fx)),
            }
        }
    }
    match best {
        Some((x, _)) => Ok(x),
        None => Err(MinimizeError::DidNotConverge {
            tol: opts.tol,
            best: best_residual,
        }),
    }
}
