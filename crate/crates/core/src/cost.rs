//! Composite reaching criteria.
//!
//! Every strategy multiplies the squared final end-effector error by a
//! bracket `1 + lambda_p I_p + lambda_c I_c (+ penalty)`, so the cost vanishes
//! exactly when the target is hit regardless of the physiological terms.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{trapezoid, DynamicsOutput};
use crate::{Error, Result};

/// Default end-effector tolerance, m.
pub const DEFAULT_TOLERANCE: f64 = 0.002;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "minError")]
    MinError,
    #[serde(rename = "minPower")]
    MinPower,
    #[serde(rename = "minCOM")]
    MinCom,
    #[serde(rename = "minPowerCOM")]
    MinPowerCom,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::MinError,
        Strategy::MinPower,
        Strategy::MinCom,
        Strategy::MinPowerCom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::MinError => "minError",
            Strategy::MinPower => "minPower",
            Strategy::MinCom => "minCOM",
            Strategy::MinPowerCom => "minPowerCOM",
        }
    }

    pub fn uses_power(self) -> bool {
        matches!(self, Strategy::MinPower | Strategy::MinPowerCom)
    }

    pub fn uses_com(self) -> bool {
        matches!(self, Strategy::MinCom | Strategy::MinPowerCom)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy '{s}' (expected minError, minPower, minCOM or minPowerCOM)"
                ))
            })
    }
}

/// Everything needed to score a movement.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec {
    pub strategy: Strategy,
    pub lambda0_power: f64,
    pub lambda0_com: f64,
    /// Diagonal of R for the power term, one entry per DoF. Empty means identity.
    pub power_weights: Vec<f64>,
    /// Diagonal of R for the COM term over x, y, z.
    pub com_weights: [f64; 3],
    pub target: Vector3<f64>,
    pub t_f: f64,
    pub tolerance_error: f64,
}

impl CostSpec {
    pub fn new(strategy: Strategy, target: Vector3<f64>, t_f: f64) -> Self {
        CostSpec {
            strategy,
            lambda0_power: 0.0,
            lambda0_com: 0.0,
            power_weights: Vec::new(),
            com_weights: [1.0; 3],
            target,
            t_f,
            tolerance_error: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_lambdas(mut self, power: f64, com: f64) -> Self {
        self.lambda0_power = power;
        self.lambda0_com = com;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda0_power", self.lambda0_power),
            ("lambda0_com", self.lambda0_com),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.t_f.is_finite() && self.t_f > 0.0) {
            return Err(Error::Config(format!(
                "t_f must be positive, got {}",
                self.t_f
            )));
        }
        if !(self.tolerance_error.is_finite() && self.tolerance_error > 0.0) {
            return Err(Error::Config(format!(
                "tolerance_error must be positive, got {}",
                self.tolerance_error
            )));
        }
        if self
            .power_weights
            .iter()
            .chain(&self.com_weights)
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::Config(
                "DoF weights must be finite and non-negative".into(),
            ));
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("target must be finite".into()));
        }
        Ok(())
    }

    /// Power weight actually applied (0 when the strategy ignores power).
    pub fn effective_lambda_power(&self) -> f64 {
        if self.strategy.uses_power() {
            self.lambda0_power
        } else {
            0.0
        }
    }

    pub fn effective_lambda_com(&self) -> f64 {
        if self.strategy.uses_com() {
            self.lambda0_com
        } else {
            0.0
        }
    }
}

/// Unweighted physiological integrals plus the (already weighted) limit penalty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Physiological {
    /// Integral of `P^T R P`, J^2 per s.
    pub power: f64,
    /// Integral of the weighted squared COM displacement, m^2 s.
    pub com: f64,
    pub penalty: f64,
}

/// Scored movement.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub e_f: Vector3<f64>,
    pub task_error_sq: f64,
    pub phys_power: f64,
    pub phys_com: f64,
    pub penalty: f64,
    pub composite: f64,
}

impl CostReport {
    pub fn error_norm(&self) -> f64 {
        self.e_f.norm()
    }
}

/// End-effector minus target.
pub fn task_error(end_effector: &Vector3<f64>, target: &Vector3<f64>) -> Vector3<f64> {
    end_effector - target
}

/// `integral P^T R P dt` with P in W; `weights` is the diagonal of R.
pub fn power_integral(out: &DynamicsOutput, weights: &[f64]) -> Result<f64> {
    let samples: Vec<f64> = out
        .power
        .iter()
        .map(|p| {
            if weights.is_empty() {
                Ok(p.iter().map(|v| v * v).sum())
            } else if weights.len() == p.len() {
                Ok(p.iter().zip(weights).map(|(v, w)| w * v * v).sum())
            } else {
                Err(Error::Contract(format!(
                    "{} power weights for {} DoF",
                    weights.len(),
                    p.len()
                )))
            }
        })
        .collect::<Result<_>>()?;
    Ok(trapezoid(&out.times, &samples))
}

/// `integral x_c^T R_c x_c dt` over the COM displacement from the first sample.
pub fn com_integral(out: &DynamicsOutput, weights: [f64; 3]) -> f64 {
    let samples: Vec<f64> = out
        .com_displacement()
        .iter()
        .map(|d| (0..3).map(|k| weights[k] * d[k] * d[k]).sum())
        .collect();
    trapezoid(&out.times, &samples)
}

/// `e^T e (1 + lambda_p I_p + lambda_c I_c + penalty)`, with the lambdas the
/// strategy does not use treated as zero.
pub fn composite_cost(task_error_sq: f64, phys: &Physiological, spec: &CostSpec) -> Result<f64> {
    if phys.power < 0.0 || phys.com < 0.0 || phys.penalty < 0.0 || task_error_sq < 0.0 {
        return Err(Error::Contract(format!(
            "cost terms are integrals of squares and cannot be negative (e^2 {task_error_sq}, power {}, com {}, penalty {})",
            phys.power, phys.com, phys.penalty
        )));
    }
    let bracket = 1.0
        + spec.effective_lambda_power() * phys.power
        + spec.effective_lambda_com() * phys.com
        + phys.penalty;
    Ok(task_error_sq * bracket)
}

/// Scores an evaluated movement (no limit penalty).
pub fn evaluate_cost(out: &DynamicsOutput, spec: &CostSpec) -> Result<CostReport> {
    spec.validate()?;
    let end = *out
        .end_effector
        .last()
        .ok_or_else(|| Error::Contract("empty movement".into()))?;
    let e_f = task_error(&end, &spec.target);
    let phys = Physiological {
        power: power_integral(out, &spec.power_weights)?,
        com: com_integral(out, spec.com_weights),
        penalty: 0.0,
    };
    report(e_f, phys, spec)
}

pub(crate) fn report(
    e_f: Vector3<f64>,
    phys: Physiological,
    spec: &CostSpec,
) -> Result<CostReport> {
    let task_error_sq = e_f.norm_squared();
    Ok(CostReport {
        e_f,
        task_error_sq,
        phys_power: phys.power,
        phys_com: phys.com,
        penalty: phys.penalty,
        composite: composite_cost(task_error_sq, &phys, spec)?,
    })
}

/// Weight that makes the physiological term equal one at `max_integral`.
pub fn calibrate_lambda0(max_integral: f64) -> Result<f64> {
    if !(max_integral.is_finite() && max_integral > 0.0) {
        return Err(Error::Calibration(format!(
            "the reference integral must be positive and finite, got {max_integral}"
        )));
    }
    Ok(1.0 / max_integral)
}
