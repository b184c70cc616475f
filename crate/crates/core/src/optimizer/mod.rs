//! Damped least-squares search over controller parameters.
//!
//! The objective exposes a residual vector `r(p)` with `C = r^T r`. Each
//! iteration forms a central-difference Jacobian, solves the damped normal
//! equations, and backtracks along the step until the cost decreases. The
//! damping drops after an accepted step and grows after a rejected one.

mod limits;
mod lm;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use limits::{clamp_final_angles, limit_penalty};
pub use lm::{lm_step, LmStepError};

/// A least-squares objective. Implementations must be pure: Jacobian
/// columns are probed concurrently.
pub trait Objective: Sync {
    fn num_params(&self) -> usize;

    /// Residuals at `p`; the cost is their squared norm.
    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>>;

    /// Maps a parameter vector onto the feasible set. Identity by default.
    fn project(&self, _p: &mut [f64]) {}

    /// Task error (m) implied by a residual vector, when the objective has one.
    fn error_norm(&self, _residuals: &[f64]) -> Option<f64> {
        None
    }
}

/// Adapter turning a residual closure into an [`Objective`].
pub struct ResidualFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> Objective for ResidualFn<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn num_params(&self) -> usize {
        self.dim
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Stop when the accepted step is no longer than this.
    pub eps_param: f64,
    /// Stop when the cost is at or below this.
    pub eps_cost: f64,
    /// Stop when the task error is at or below this (m), for objectives that report one.
    pub error_tolerance: f64,
    pub max_iterations: usize,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub sigma0: f64,
    pub sigma_up: f64,
    pub sigma_down: f64,
    /// Damping beyond which the search is considered stalled.
    pub sigma_max: f64,
    pub shrink: f64,
    pub max_trials: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            eps_param: 1e-6,
            eps_cost: 1e-6,
            error_tolerance: 0.002,
            max_iterations: 500,
            fd_step: 1e-6,
            sigma0: 1e-3,
            sigma_up: 10.0,
            sigma_down: 0.1,
            sigma_max: 1e16,
            shrink: 0.5,
            max_trials: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_param", self.eps_param),
            ("eps_cost", self.eps_cost),
            ("error_tolerance", self.error_tolerance),
            ("fd_step", self.fd_step),
            ("sigma0", self.sigma0),
            ("sigma_max", self.sigma_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "optimizer.{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.sigma_up > 1.0 && self.sigma_down > 0.0 && self.sigma_down < 1.0) {
            return Err(Error::Config(format!(
                "optimizer damping factors need sigma_up > 1 > sigma_down > 0, got {} and {}",
                self.sigma_up, self.sigma_down
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config(format!(
                "optimizer.shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.max_trials == 0 {
            return Err(Error::Config(
                "optimizer.max_trials must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "param-tol")]
    ParamTol,
    #[serde(rename = "cost-tol")]
    CostTol,
    #[serde(rename = "error-tol")]
    ErrorTol,
    #[serde(rename = "max-iter")]
    MaxIter,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ParamTol => "param-tol",
            Termination::CostTol => "cost-tol",
            Termination::ErrorTol => "error-tol",
            Termination::MaxIter => "max-iter",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of the progress log. Row 0 is the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub step_norm: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub error_norm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub params: Vec<f64>,
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub error_norm: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
    /// Wall-clock seconds. Not reproducible; kept out of deterministic outputs.
    pub wall_time: f64,
}

impl OptResult {
    /// Costs of the accepted iterates, starting point first.
    pub fn accepted_costs(&self) -> Vec<f64> {
        self.history.iter().map(|h| h.cost).collect()
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Counts objective evaluations and rejects non-finite residuals.
struct Counted<'a, O: ?Sized> {
    inner: &'a O,
    count: AtomicUsize,
}

impl<O: Objective + ?Sized> Counted<'_, O> {
    fn eval(&self, p: &[f64], what: &dyn Fn() -> String) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let r = self.inner.residuals(p)?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!(
                "non-finite residual at {}",
                what()
            )));
        }
        Ok(r)
    }
}

/// Central-difference Jacobian of the residuals, `h_i = fd_step max(1, |p_i|)`.
/// Returns the Jacobian and the residuals at `p`.
pub fn fd_jacobian<O: Objective + ?Sized>(
    objective: &O,
    p: &[f64],
    fd_step: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let counted = Counted {
        inner: objective,
        count: AtomicUsize::new(0),
    };
    fd_jacobian_counted(&counted, p, fd_step)
}

fn fd_jacobian_counted<O: Objective + ?Sized>(
    objective: &Counted<'_, O>,
    p: &[f64],
    fd_step: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let r0 = objective.eval(p, &|| "the base point".to_string())?;
    let columns: Vec<Vec<f64>> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let h = fd_step * p[i].abs().max(1.0);
            let mut probe = p.to_vec();
            probe[i] = p[i] + h;
            let ahead = objective.eval(&probe, &|| format!("coordinate {i} (+h)"))?;
            probe[i] = p[i] - h;
            let behind = objective.eval(&probe, &|| format!("coordinate {i} (-h)"))?;
            if ahead.len() != r0.len() || behind.len() != r0.len() {
                return Err(Error::Evaluation(format!(
                    "residual length changed when probing coordinate {i}"
                )));
            }
            Ok(ahead
                .iter()
                .zip(&behind)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect())
        })
        .collect::<Result<_>>()?;
    let jac = DMatrix::from_fn(r0.len(), p.len(), |row, col| columns[col][row]);
    Ok((jac, r0))
}

/// Gradient of `C = r^T r`: `2 J^T r`.
pub fn gradient(jac: &DMatrix<f64>, r: &[f64]) -> DVector<f64> {
    2.0 * jac.transpose() * DVector::from_column_slice(r)
}

/// Outcome of a successful backtracking search.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchStep {
    pub alpha: f64,
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub cost: f64,
}

/// Backtracks from `alpha = 1` by `shrink` until `C(p + alpha dp) < cost0`.
/// Returns `None` after `max_trials` failures.
pub fn line_search<O: Objective + ?Sized>(
    objective: &O,
    p: &[f64],
    cost0: f64,
    dp: &[f64],
    shrink: f64,
    max_trials: usize,
) -> Result<Option<LineSearchStep>> {
    let counted = Counted {
        inner: objective,
        count: AtomicUsize::new(0),
    };
    line_search_counted(&counted, p, cost0, dp, shrink, max_trials)
}

fn line_search_counted<O: Objective + ?Sized>(
    objective: &Counted<'_, O>,
    p: &[f64],
    cost0: f64,
    dp: &[f64],
    shrink: f64,
    max_trials: usize,
) -> Result<Option<LineSearchStep>> {
    let mut alpha = 1.0;
    for _ in 0..max_trials {
        let mut trial: Vec<f64> = p.iter().zip(dp).map(|(a, d)| a + alpha * d).collect();
        objective.inner.project(&mut trial);
        let r = objective.eval(&trial, &|| format!("line-search step {alpha}"))?;
        let cost = cost_of(&r);
        if cost < cost0 {
            return Ok(Some(LineSearchStep {
                alpha,
                params: trial,
                residuals: r,
                cost,
            }));
        }
        alpha *= shrink;
    }
    Ok(None)
}

/// Runs the search from `p0`.
pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    p0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptResult> {
    optimize_with_observer(objective, p0, config, |_| {})
}

/// As [`optimize`], calling `observe` after every logged iteration.
pub fn optimize_with_observer<O: Objective + ?Sized>(
    objective: &O,
    p0: &[f64],
    config: &OptimizerConfig,
    mut observe: impl FnMut(&IterationRecord),
) -> Result<OptResult> {
    config.validate()?;
    if p0.len() != objective.num_params() {
        return Err(Error::Contract(format!(
            "initial parameters have {} entries, objective expects {}",
            p0.len(),
            objective.num_params()
        )));
    }
    let started = Instant::now();
    let counted = Counted {
        inner: objective,
        count: AtomicUsize::new(0),
    };
    let mut p = p0.to_vec();
    objective.project(&mut p);
    let mut r = counted.eval(&p, &|| "the initial parameters".to_string())?;
    let mut cost = cost_of(&r);
    let mut sigma = config.sigma0;
    let first = IterationRecord {
        iteration: 0,
        cost,
        step_norm: 0.0,
        sigma,
        alpha: 0.0,
        error_norm: objective.error_norm(&r),
    };
    observe(&first);
    let mut history = vec![first];

    let converged = |cost: f64, r: &[f64]| {
        if cost <= config.eps_cost {
            Some(Termination::CostTol)
        } else if objective
            .error_norm(r)
            .is_some_and(|e| e <= config.error_tolerance)
        {
            Some(Termination::ErrorTol)
        } else {
            None
        }
    };

    let mut termination = converged(cost, &r);
    let mut iterations = 0;
    while termination.is_none() {
        if iterations == config.max_iterations {
            termination = Some(Termination::MaxIter);
            break;
        }
        let (jac, _) = fd_jacobian_counted(&counted, &p, config.fd_step)?;
        let grad = gradient(&jac, &r);
        let hessian = 2.0 * jac.transpose() * &jac;

        let mut accepted = None;
        while sigma <= config.sigma_max {
            let dp = match lm_step(&hessian, &grad, sigma, 1.0) {
                Ok(dp) => dp,
                Err(LmStepError::NotPositiveDefinite) => {
                    sigma *= config.sigma_up;
                    continue;
                }
            };
            if grad.dot(&dp) >= 0.0 {
                sigma *= config.sigma_up;
                continue;
            }
            match line_search_counted(
                &counted,
                &p,
                cost,
                dp.as_slice(),
                config.shrink,
                config.max_trials,
            )? {
                Some(step) => {
                    accepted = Some(step);
                    break;
                }
                None => sigma *= config.sigma_up,
            }
        }
        iterations += 1;
        let Some(step) = accepted else {
            // no decreasing step at any damping: the step has vanished
            termination = Some(Termination::ParamTol);
            break;
        };
        let step_norm = p
            .iter()
            .zip(&step.params)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let record = IterationRecord {
            iteration: iterations,
            cost: step.cost,
            step_norm,
            sigma,
            alpha: step.alpha,
            error_norm: objective.error_norm(&step.residuals),
        };
        observe(&record);
        history.push(record);
        p = step.params;
        r = step.residuals;
        cost = step.cost;
        sigma = (sigma * config.sigma_down).max(f64::MIN_POSITIVE);
        termination = converged(cost, &r);
        if termination.is_none() && step_norm <= config.eps_param {
            termination = Some(Termination::ParamTol);
        }
    }

    Ok(OptResult {
        error_norm: objective.error_norm(&r),
        params: p,
        cost,
        residuals: r,
        iterations,
        evaluations: counted.count.load(Ordering::Relaxed),
        termination: termination.expect("loop exits with a reason"),
        history,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
