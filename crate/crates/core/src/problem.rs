//! The reaching objective: controller parameters in, residuals out.

use nalgebra::Vector3;

use crate::body_model::BodyModel;
use crate::controller::{JointTrajectory, ParamLayout, DEFAULT_STEP};
use crate::cost::{self, CostReport, CostSpec, Physiological};
use crate::dynamics::{evaluate_movement, trapezoid, DynamicsOutput};
use crate::kinematics::forward_kinematics;
use crate::optimizer::{clamp_final_angles, limit_penalty, Objective};
use crate::{Error, Result};

/// Default exterior-penalty weight, deg^-2.
pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e3;

/// Full evaluation of one parameter vector.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub trajectory: JointTrajectory,
    pub dynamics: DynamicsOutput,
    pub report: CostReport,
}

/// Reaching a fixed target with a polynomial controller per active DoF.
///
/// Residuals are `[e_x, e_y, e_z]` followed by `|e| sqrt(lambda I)` for each
/// physiological term the strategy uses and `|e| sqrt(penalty)`, so their
/// squared norm is the composite cost.
#[derive(Clone, Debug)]
pub struct ReachProblem {
    model: BodyModel,
    layout: ParamLayout,
    spec: CostSpec,
    step: f64,
    penalty_weight: f64,
}

impl ReachProblem {
    pub fn new(model: BodyModel, layout: ParamLayout, spec: CostSpec) -> Result<Self> {
        spec.validate()?;
        if layout.is_empty() {
            return Err(Error::Config("no active degrees of freedom".into()));
        }
        if !spec.power_weights.is_empty() && spec.power_weights.len() != model.dof_count() {
            return Err(Error::Config(format!(
                "power weights have {} entries, model has {} DoF",
                spec.power_weights.len(),
                model.dof_count()
            )));
        }
        Ok(ReachProblem {
            model,
            layout,
            spec,
            step: DEFAULT_STEP,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
        })
    }

    pub fn with_penalty_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Config(format!(
                "penalty weight must be non-negative, got {weight}"
            )));
        }
        self.penalty_weight = weight;
        Ok(self)
    }

    pub fn model(&self) -> &BodyModel {
        &self.model
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn spec(&self) -> &CostSpec {
        &self.spec
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    /// The motionless starting point.
    pub fn initial_params(&self) -> Vec<f64> {
        self.layout.initial(&self.model)
    }

    /// Search variables to controller parameters: the `p6` entries are
    /// searched as `p6 t_f^6` (deg), their contribution at `t_f`.
    pub fn to_params(&self, u: &[f64]) -> Vec<f64> {
        let s = self.spec.t_f.powi(6);
        u.iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 1 { v / s } else { *v })
            .collect()
    }

    /// Inverse of [`ReachProblem::to_params`].
    pub fn to_search(&self, params: &[f64]) -> Vec<f64> {
        let s = self.spec.t_f.powi(6);
        params
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 1 { v * s } else { *v })
            .collect()
    }

    fn clamped(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.layout.len() {
            return Err(Error::Contract(format!(
                "parameter vector has {} entries, expected {}",
                u.len(),
                self.layout.len()
            )));
        }
        let mut p = self.to_params(u);
        clamp_final_angles(&self.model, &self.layout, &mut p);
        Ok(p)
    }

    /// Complete evaluation with inverse dynamics, for reporting.
    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        let p = self.clamped(params)?;
        let trajectory = self
            .layout
            .trajectory(&self.model, &p, self.spec.t_f, self.step)?;
        let dynamics = evaluate_movement(&self.model, &trajectory)?;
        let mut report = cost::evaluate_cost(&dynamics, &self.spec)?;
        report.penalty = limit_penalty(&self.model, &trajectory, self.penalty_weight);
        report = cost::report(report.e_f, self.physiological_of(&report), &self.spec)?;
        Ok(Evaluation {
            params: p,
            trajectory,
            dynamics,
            report,
        })
    }

    fn physiological_of(&self, r: &CostReport) -> Physiological {
        Physiological {
            power: r.phys_power,
            com: r.phys_com,
            penalty: r.penalty,
        }
    }

    /// Cost terms, computing only what the strategy needs.
    fn terms(&self, params: &[f64]) -> Result<(Vector3<f64>, Physiological)> {
        let p = self.clamped(params)?;
        let trajectory = self
            .layout
            .trajectory(&self.model, &p, self.spec.t_f, self.step)?;
        let penalty = limit_penalty(&self.model, &trajectory, self.penalty_weight);
        let strategy = self.spec.strategy;
        let (end, power, com) = if strategy.uses_power() {
            let out = evaluate_movement(&self.model, &trajectory)?;
            let com = if strategy.uses_com() {
                cost::com_integral(&out, self.spec.com_weights)
            } else {
                0.0
            };
            (
                *out.end_effector.last().expect("non-empty"),
                cost::power_integral(&out, &self.spec.power_weights)?,
                com,
            )
        } else if strategy.uses_com() {
            let mut samples = Vec::with_capacity(trajectory.len());
            let mut c0 = None;
            let mut end = Vector3::zeros();
            for q in &trajectory.theta {
                let poses = forward_kinematics(&self.model, q)?;
                let d = poses.com - *c0.get_or_insert(poses.com);
                samples.push(
                    (0..3)
                        .map(|k| self.spec.com_weights[k] * d[k] * d[k])
                        .sum::<f64>(),
                );
                end = poses.end_effector;
            }
            (end, 0.0, trapezoid(&trajectory.times, &samples))
        } else {
            let last = trajectory.theta.last().expect("non-empty");
            (
                forward_kinematics(&self.model, last)?.end_effector,
                0.0,
                0.0,
            )
        };
        Ok((
            cost::task_error(&end, &self.spec.target),
            Physiological {
                power,
                com,
                penalty,
            },
        ))
    }

    /// Cost report without storing the trajectory.
    pub fn report(&self, params: &[f64]) -> Result<CostReport> {
        let (e_f, phys) = self.terms(params)?;
        cost::report(e_f, phys, &self.spec)
    }
}

impl Objective for ReachProblem {
    fn num_params(&self) -> usize {
        self.layout.len()
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (e, phys) = self.terms(p)?;
        let norm = e.norm();
        let mut r = vec![e.x, e.y, e.z];
        if self.spec.strategy.uses_power() {
            r.push(norm * (self.spec.effective_lambda_power() * phys.power).sqrt());
        }
        if self.spec.strategy.uses_com() {
            r.push(norm * (self.spec.effective_lambda_com() * phys.com).sqrt());
        }
        r.push(norm * phys.penalty.sqrt());
        Ok(r)
    }

    fn project(&self, p: &mut [f64]) {
        clamp_final_angles(&self.model, &self.layout, p);
    }

    fn error_norm(&self, r: &[f64]) -> Option<f64> {
        Some((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt())
    }
}
