//! Deterministic fixed-step RK4 integration with fault-driven step halving.
//!
//! The loop advances a flat state vector on the uniform grid `t_k = k·h`.
//! When the field reports a fault (nonpositive own-weight, non-finite
//! derivative) or a step produces a non-finite state, the *current nominal
//! step* is re-taken as `2^k` equal substeps, halving until the substep would
//! drop below `min_step`; a fault that survives the floor aborts the run with
//! diagnostics. Successful runs are bit-deterministic functions of the
//! initial state and configuration.

use nalgebra::DVector;
use thiserror::Error;

/// A retryable field fault: evaluation failed in a way that a finer step may
/// repair.
#[derive(Debug, Clone)]
pub struct FieldFault {
    /// Offending agent, when the fault is attributable to one.
    pub agent: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for FieldFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.agent {
            Some(a) => write!(f, "agent {a}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl From<crate::dynamics::DynamicsError> for FieldFault {
    fn from(e: crate::dynamics::DynamicsError) -> Self {
        use crate::dynamics::DynamicsError as D;
        let agent = match &e {
            D::NonPositiveWeight { agent, .. }
            | D::NonFiniteDerivative { agent }
            | D::NonPositiveSigma { agent, .. }
            | D::DimensionMismatch { agent, .. } => Some(*agent),
            _ => None,
        };
        FieldFault {
            agent,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    #[error("integration fault at t = {t}: {fault} (step halved to {final_step:.3e}, floor {min_step:.3e})")]
    PersistentFault {
        t: f64,
        final_step: f64,
        min_step: f64,
        fault: FieldFault,
    },
}

/// Fixed-step integration parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    /// Nominal step `h`.
    pub step: f64,
    /// Horizon; the loop runs `round(t_end/step)` nominal steps.
    pub t_end: f64,
    /// Record every k-th nominal step (step 0 is always recorded).
    pub record_stride: usize,
    /// Substep floor for fault-driven halving.
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_end: 100.0,
            record_stride: 100,
            min_step: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.step > 0.0) {
            return Err(IntegrateError::InvalidConfig(format!(
                "step = {} must be positive",
                self.step
            )));
        }
        if !(self.t_end >= 0.0) {
            return Err(IntegrateError::InvalidConfig(format!(
                "t_end = {} must be nonnegative",
                self.t_end
            )));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step) {
            return Err(IntegrateError::InvalidConfig(format!(
                "min_step = {} must satisfy 0 < min_step <= step",
                self.min_step
            )));
        }
        if self.record_stride == 0 {
            return Err(IntegrateError::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.step).round() as usize
    }
}

/// Called after every accepted nominal step (and once at t = 0).
pub trait Observer {
    fn on_step(&mut self, t: f64, state: &DVector<f64>);
}

impl<F: FnMut(f64, &DVector<f64>)> Observer for F {
    fn on_step(&mut self, t: f64, state: &DVector<f64>) {
        self(t, state)
    }
}

/// Time-indexed state records of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strictly increasing record times `k · stride · h`.
    pub times: Vec<f64>,
    /// Flat state snapshots at the record times.
    pub states: Vec<DVector<f64>>,
    /// State at the end of the run (equals the last record when the stride
    /// divides the step count).
    pub final_state: DVector<f64>,
    pub final_time: f64,
    /// Number of nominal steps that needed fault-driven halving.
    pub halved_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One classical Runge–Kutta step of size `h` (may be negative).
pub fn rk4_step<F>(field: &mut F, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>, FieldFault>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, FieldFault>,
{
    let k1 = field(t, y)?;
    let k2 = field(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = field(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = field(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn non_finite_fault(y: &DVector<f64>) -> Option<FieldFault> {
    y.iter().position(|v| !v.is_finite()).map(|i| FieldFault {
        agent: None,
        message: format!("non-finite state component at flat index {i}"),
    })
}

/// Advances one nominal step of size `h` from `(t, y)`, retrying with `2^k`
/// equal substeps on faults.
fn advance_nominal<F>(
    field: &mut F,
    t: f64,
    y: &DVector<f64>,
    h: f64,
    min_step: f64,
) -> Result<(DVector<f64>, bool), (f64, FieldFault)>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, FieldFault>,
{
    let mut pieces = 1usize;
    let mut last_fault: Option<(f64, FieldFault)> = None;
    loop {
        let h_sub = h / pieces as f64;
        if h_sub < min_step {
            let (fs, fault) = last_fault.expect("halving only continues after a fault");
            return Err((fs, fault));
        }
        let mut cur = y.clone();
        let mut ok = true;
        for s in 0..pieces {
            let t_sub = t + h_sub * s as f64;
            match rk4_step(field, t_sub, &cur, h_sub) {
                Ok(next) => {
                    if let Some(f) = non_finite_fault(&next) {
                        last_fault = Some((h_sub, f));
                        ok = false;
                        break;
                    }
                    cur = next;
                }
                Err(f) => {
                    last_fault = Some((h_sub, f));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok((cur, pieces > 1));
        }
        pieces *= 2;
    }
}

/// Fixed-step loop from 0 to `t_end` recording every `record_stride`-th step.
pub fn integrate<F>(
    y0: &DVector<f64>,
    field: &mut F,
    cfg: &IntegratorConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, FieldFault>,
{
    cfg.validate()?;
    let steps = cfg.n_steps();
    let mut times = Vec::with_capacity(steps / cfg.record_stride + 1);
    let mut states = Vec::with_capacity(steps / cfg.record_stride + 1);
    let mut y = y0.clone();
    let mut halved_steps = 0usize;

    times.push(0.0);
    states.push(y.clone());
    for obs in observers.iter_mut() {
        obs.on_step(0.0, &y);
    }

    for k in 0..steps {
        let t = k as f64 * cfg.step;
        let (next, halved) = advance_nominal(field, t, &y, cfg.step, cfg.min_step)
            .map_err(|(final_step, fault)| IntegrateError::PersistentFault {
                t,
                final_step,
                min_step: cfg.min_step,
                fault,
            })?;
        y = next;
        if halved {
            halved_steps += 1;
        }
        let t_next = (k + 1) as f64 * cfg.step;
        for obs in observers.iter_mut() {
            obs.on_step(t_next, &y);
        }
        if (k + 1) % cfg.record_stride == 0 {
            times.push(t_next);
            states.push(y.clone());
        }
    }

    Ok(Trajectory {
        times,
        states,
        final_state: y,
        final_time: steps as f64 * cfg.step,
        halved_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use std::cell::Cell;

    fn exp_decay(t: f64, y: &DVector<f64>) -> Result<DVector<f64>, FieldFault> {
        let _ = t;
        Ok(-y)
    }

    #[test]
    fn rk4_single_step_exponential() {
        let y0 = dvector![1.0];
        let y1 = rk4_step(&mut exp_decay, 0.0, &y0, 0.1).unwrap();
        assert!((y1[0] - 0.9048374).abs() < 1e-7, "y1 = {}", y1[0]);
    }

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let mut zero = |_t: f64, y: &DVector<f64>| Ok(DVector::zeros(y.len()));
        let y0 = dvector![3.0, -1.5];
        let y1 = rk4_step(&mut zero, 0.0, &y0, 0.25).unwrap();
        assert_eq!(y1, y0);
    }

    #[test]
    fn zero_horizon_records_only_initial_state() {
        let cfg = IntegratorConfig {
            step: 1e-2,
            t_end: 0.0,
            record_stride: 5,
            min_step: 1e-4,
        };
        let traj = integrate(&dvector![2.0], &mut exp_decay, &cfg, &mut []).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.final_state, dvector![2.0]);
    }

    #[test]
    fn record_count_matches_stride_invariant() {
        let cfg = IntegratorConfig {
            step: 1e-2,
            t_end: 1.0,
            record_stride: 7,
            min_step: 1e-4,
        };
        let traj = integrate(&dvector![1.0], &mut exp_decay, &cfg, &mut []).unwrap();
        // floor(100/7) + 1 records; times strictly increasing.
        assert_eq!(traj.len(), 100 / 7 + 1);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn linear_quadratic_flow_matches_closed_form() {
        // ẏ = -4(y - 3), y(0) = 10: y(t) = 3 + 7 exp(-4t).
        let mut field =
            |_t: f64, y: &DVector<f64>| Ok(dvector![-4.0 * (y[0] - 3.0)]);
        let cfg = IntegratorConfig {
            step: 1e-3,
            t_end: 1.0,
            record_stride: 1000,
            min_step: 1e-6,
        };
        let traj = integrate(&dvector![10.0], &mut field, &cfg, &mut []).unwrap();
        let exact = 3.0 + 7.0 * (-4.0f64).exp();
        assert!(
            (traj.final_state[0] - exact).abs() < 1e-9,
            "err = {:.3e}",
            (traj.final_state[0] - exact).abs()
        );
    }

    #[test]
    fn fourth_order_convergence_ratio() {
        // Global error on the linear test shrinks ~16x per halving of h.
        let exact = 3.0 + 7.0 * (-4.0f64).exp();
        let err_at = |h: f64| {
            let mut field =
                |_t: f64, y: &DVector<f64>| Ok(dvector![-4.0 * (y[0] - 3.0)]);
            let cfg = IntegratorConfig {
                step: h,
                t_end: 1.0,
                record_stride: usize::MAX,
                min_step: h / 16.0,
            };
            let traj = integrate(&dvector![10.0], &mut field, &cfg, &mut []).unwrap();
            (traj.final_state[0] - exact).abs()
        };
        let (e1, e2, e3) = (err_at(0.05), err_at(0.025), err_at(0.0125));
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!((12.0..=20.0).contains(&r1), "ratio1 = {r1}");
        assert!((12.0..=20.0).contains(&r2), "ratio2 = {r2}");
    }

    #[test]
    fn transient_fault_triggers_halving_and_recovers() {
        let faults_left = Cell::new(1u32);
        let calls = Cell::new(0u32);
        let mut field = |_t: f64, y: &DVector<f64>| {
            calls.set(calls.get() + 1);
            // Fault exactly once, on the first stage of the 6th nominal step.
            if calls.get() == 21 && faults_left.get() > 0 {
                faults_left.set(faults_left.get() - 1);
                return Err(FieldFault {
                    agent: Some(3),
                    message: "synthetic transient fault".into(),
                });
            }
            Ok(-y)
        };
        let cfg = IntegratorConfig {
            step: 0.01,
            t_end: 0.1,
            record_stride: 10,
            min_step: 1e-5,
        };
        let traj = integrate(&dvector![1.0], &mut field, &cfg, &mut []).unwrap();
        assert_eq!(traj.halved_steps, 1);
        // Accuracy unaffected by the retry.
        assert!((traj.final_state[0] - (-0.1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn persistent_fault_aborts_with_diagnostics() {
        let mut field = |_t: f64, _y: &DVector<f64>| -> Result<DVector<f64>, FieldFault> {
            Err(FieldFault {
                agent: Some(2),
                message: "gradient returned NaN".into(),
            })
        };
        let cfg = IntegratorConfig {
            step: 1e-2,
            t_end: 1.0,
            record_stride: 1,
            min_step: 1e-4,
        };
        match integrate(&dvector![1.0], &mut field, &cfg, &mut []) {
            Err(IntegrateError::PersistentFault { t, fault, .. }) => {
                assert_eq!(t, 0.0);
                assert_eq!(fault.agent, Some(2));
            }
            other => panic!("expected persistent fault, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_state_aborts_after_halving_floor() {
        // Field explodes no matter the step: every attempt yields inf.
        let mut field = |_t: f64, _y: &DVector<f64>| Ok(dvector![f64::INFINITY]);
        let cfg = IntegratorConfig {
            step: 1e-2,
            t_end: 1.0,
            record_stride: 1,
            min_step: 1e-3,
        };
        assert!(matches!(
            integrate(&dvector![1.0], &mut field, &cfg, &mut []),
            Err(IntegrateError::PersistentFault { .. })
        ));
    }

    #[test]
    fn observers_see_every_accepted_step() {
        let mut seen = Vec::new();
        {
            let mut obs = |t: f64, _s: &DVector<f64>| seen.push(t);
            let mut obs_list: [&mut dyn Observer; 1] = [&mut obs];
            let cfg = IntegratorConfig {
                step: 0.25,
                t_end: 1.0,
                record_stride: 2,
                min_step: 1e-3,
            };
            integrate(&dvector![1.0], &mut exp_decay, &cfg, &mut obs_list).unwrap();
        }
        assert_eq!(seen, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn determinism_bitwise() {
        let run = || {
            let cfg = IntegratorConfig {
                step: 1e-3,
                t_end: 2.0,
                record_stride: 100,
                min_step: 1e-6,
            };
            integrate(&dvector![1.0, -2.0], &mut |_t, y: &DVector<f64>| {
                Ok(dvector![-y[0] + 0.3 * y[1], -2.0 * y[1]])
            }, &cfg, &mut [])
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.final_state, b.final_state);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            assert_eq!(sa, sb);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            IntegratorConfig { step: 0.0, ..Default::default() },
            IntegratorConfig { min_step: 0.0, ..Default::default() },
            IntegratorConfig { min_step: 1.0, step: 0.5, ..Default::default() },
            IntegratorConfig { record_stride: 0, ..Default::default() },
            IntegratorConfig { t_end: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?} should be invalid");
        }
    }
}
