//! Polynomial joint controllers and the minimum-jerk reference.
//!
//! Each active DoF follows a 6th-order polynomial that starts at rest at its
//! neutral angle and ends at rest at `theta_f` after `t_f` seconds. With zero
//! velocity and acceleration imposed at both ends, only `theta_f` and the
//! 6th coefficient remain free. Angles are degrees, so `p6` is deg/s^6.

use nalgebra::Vector3;

use crate::body_model::BodyModel;
use crate::{Error, Result};

/// Fixed sample interval, s.
pub const DEFAULT_STEP: f64 = 0.001;

/// Coefficients `p0..p6` of `theta(t) = sum p_k t^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialCoefficients(pub [f64; 7]);

impl PolynomialCoefficients {
    pub fn constant(value: f64) -> Self {
        let mut p = [0.0; 7];
        p[0] = value;
        PolynomialCoefficients(p)
    }

    pub fn position(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        (1..7)
            .rev()
            .fold(0.0, |acc, k| acc * t + k as f64 * self.0[k])
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        (2..7)
            .rev()
            .fold(0.0, |acc, k| acc * t + (k * (k - 1)) as f64 * self.0[k])
    }

    pub fn jerk(&self, t: f64) -> f64 {
        (3..7).rev().fold(0.0, |acc, k| {
            acc * t + (k * (k - 1) * (k - 2)) as f64 * self.0[k]
        })
    }
}

/// Closes the boundary conditions `theta(0) = theta0`, `theta(t_f) = theta_f`,
/// zero velocity and acceleration at both ends, leaving `p6` free.
pub fn closure_coefficients(
    theta0: f64,
    theta_f: f64,
    p6: f64,
    t_f: f64,
) -> Result<PolynomialCoefficients> {
    if !(t_f.is_finite() && t_f > 0.0) {
        return Err(Error::Contract(format!(
            "movement duration must be positive, got {t_f}"
        )));
    }
    let delta = theta_f - theta0;
    let w = p6 * t_f.powi(6);
    Ok(PolynomialCoefficients([
        theta0,
        0.0,
        0.0,
        (10.0 * delta - w) / t_f.powi(3),
        (-15.0 * delta + 3.0 * w) / t_f.powi(4),
        (6.0 * delta - 3.0 * w) / t_f.powi(5),
        p6,
    ]))
}

/// `round(t_f / step) + 1` evenly spaced samples from 0 to exactly `t_f`.
pub fn time_grid(t_f: f64, step: f64) -> Result<Vec<f64>> {
    if !(t_f.is_finite() && t_f > 0.0) {
        return Err(Error::Contract(format!(
            "movement duration must be positive, got {t_f}"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Contract(format!(
            "sample step must be positive, got {step}"
        )));
    }
    let intervals = ((t_f / step).round() as usize).max(1);
    let mut grid: Vec<f64> = (0..=intervals)
        .map(|k| t_f * k as f64 / intervals as f64)
        .collect();
    grid[intervals] = t_f;
    Ok(grid)
}

/// Sampled joint angles and their derivatives, sample-major
/// (`theta[k][i]` is DoF `i` at `times[k]`). deg, deg/s, deg/s^2.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory {
    pub times: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub theta_dot: Vec<Vec<f64>>,
    pub theta_ddot: Vec<Vec<f64>>,
}

impl JointTrajectory {
    /// Checks that all arrays agree in shape and time increases.
    pub fn new(
        times: Vec<f64>,
        theta: Vec<Vec<f64>>,
        theta_dot: Vec<Vec<f64>>,
        theta_ddot: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::Contract("trajectory has no samples".into()));
        }
        if theta.len() != n || theta_dot.len() != n || theta_ddot.len() != n {
            return Err(Error::Contract("trajectory arrays differ in length".into()));
        }
        let dofs = theta[0].len();
        if [&theta, &theta_dot, &theta_ddot]
            .iter()
            .any(|a| a.iter().any(|row| row.len() != dofs))
        {
            return Err(Error::Contract(
                "trajectory rows differ in DoF count".into(),
            ));
        }
        // negated so NaN times are rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("trajectory times must increase".into()));
        }
        Ok(JointTrajectory {
            times,
            theta,
            theta_dot,
            theta_ddot,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dof_count(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times[0]
    }

    /// The same motion played backwards: velocities change sign.
    pub fn reversed(&self) -> Self {
        let t_end = *self.times.last().unwrap_or(&0.0);
        let neg = |v: &Vec<f64>| v.iter().map(|x| -x).collect::<Vec<_>>();
        JointTrajectory {
            times: self.times.iter().rev().map(|t| t_end - t).collect(),
            theta: self.theta.iter().rev().cloned().collect(),
            theta_dot: self.theta_dot.iter().rev().map(neg).collect(),
            theta_ddot: self.theta_ddot.iter().rev().cloned().collect(),
        }
    }
}

/// Samples one polynomial per DoF with analytic derivatives.
pub fn eval_trajectory(
    coeffs: &[PolynomialCoefficients],
    t_f: f64,
    step: f64,
) -> Result<JointTrajectory> {
    let times = time_grid(t_f, step)?;
    let sample = |f: fn(&PolynomialCoefficients, f64) -> f64| -> Vec<Vec<f64>> {
        times
            .iter()
            .map(|&t| coeffs.iter().map(|c| f(c, t)).collect())
            .collect()
    };
    let theta = sample(PolynomialCoefficients::position);
    let theta_dot = sample(PolynomialCoefficients::velocity);
    let theta_ddot = sample(PolynomialCoefficients::acceleration);
    Ok(JointTrajectory {
        times,
        theta,
        theta_dot,
        theta_ddot,
    })
}

/// Minimum-jerk shape `s(u) = 10u^3 - 15u^4 + 6u^5` and its first two
/// derivatives with respect to `u`.
pub fn min_jerk_shape(u: f64) -> (f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        u3 * (10.0 + u * (-15.0 + 6.0 * u)),
        u2 * (30.0 + u * (-60.0 + 30.0 * u)),
        u * (60.0 + u * (-180.0 + 120.0 * u)),
    )
}

fn check_min_jerk_time(duration: f64, t: f64) -> Result<()> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Contract(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(Error::Contract(format!("time {t} outside [0, {duration}]")));
    }
    Ok(())
}

/// Minimum-jerk point-to-point position at time `t`.
pub fn min_jerk_position(
    x0: Vector3<f64>,
    xf: Vector3<f64>,
    duration: f64,
    t: f64,
) -> Result<Vector3<f64>> {
    check_min_jerk_time(duration, t)?;
    let (s, _, _) = min_jerk_shape(t / duration);
    Ok(x0 + (xf - x0) * s)
}

/// Position, velocity and acceleration of the minimum-jerk path at `t`.
pub fn min_jerk_state(
    x0: Vector3<f64>,
    xf: Vector3<f64>,
    duration: f64,
    t: f64,
) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
    check_min_jerk_time(duration, t)?;
    let (s, ds, dds) = min_jerk_shape(t / duration);
    let d = xf - x0;
    Ok((
        x0 + d * s,
        d * (ds / duration),
        d * (dds / (duration * duration)),
    ))
}

/// Which DoF carry optimization parameters. Parameters are stored in pairs
/// `[theta_f, p6]` per active DoF, in ascending DoF order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    active: Vec<usize>,
}

impl ParamLayout {
    /// Every DoF except locked ones (range within the lock band).
    pub fn unlocked(model: &BodyModel) -> Self {
        ParamLayout {
            active: (0..model.dof_count())
                .filter(|&i| !model.is_locked(i))
                .collect(),
        }
    }

    /// Every DoF, locked or not.
    pub fn all(model: &BodyModel) -> Self {
        ParamLayout {
            active: (0..model.dof_count()).collect(),
        }
    }

    /// Explicit `joint.plane` names.
    pub fn from_names<S: AsRef<str>>(model: &BodyModel, names: &[S]) -> Result<Self> {
        let mut active = names
            .iter()
            .map(|n| {
                model
                    .find_dof(n.as_ref())
                    .ok_or_else(|| Error::Config(format!("unknown DoF `{}`", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        active.sort_unstable();
        active.dedup();
        Ok(ParamLayout { active })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Length of the parameter vector.
    pub fn len(&self) -> usize {
        2 * self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// All `theta_f` at neutral and all `p6` zero: the motionless movement.
    pub fn initial(&self, model: &BodyModel) -> Vec<f64> {
        let neutral = model.neutral_posture();
        self.active
            .iter()
            .flat_map(|&i| [neutral[i], 0.0])
            .collect()
    }

    /// Final angle parameter of active DoF `k`.
    pub fn theta_f_index(k: usize) -> usize {
        2 * k
    }

    pub fn p6_index(k: usize) -> usize {
        2 * k + 1
    }

    /// Closed-form coefficients for every DoF; inactive DoF hold neutral.
    pub fn coefficients(
        &self,
        model: &BodyModel,
        params: &[f64],
        t_f: f64,
    ) -> Result<Vec<PolynomialCoefficients>> {
        if params.len() != self.len() {
            return Err(Error::Contract(format!(
                "parameter vector has {} entries, layout expects {}",
                params.len(),
                self.len()
            )));
        }
        let neutral = model.neutral_posture();
        let mut out: Vec<_> = neutral
            .iter()
            .map(|&v| PolynomialCoefficients::constant(v))
            .collect();
        for (k, &dof) in self.active.iter().enumerate() {
            out[dof] = closure_coefficients(neutral[dof], params[2 * k], params[2 * k + 1], t_f)?;
        }
        Ok(out)
    }

    /// Full-posture final angles implied by `params`.
    pub fn final_posture(&self, model: &BodyModel, params: &[f64]) -> Vec<f64> {
        let mut q = model.neutral_posture().to_vec();
        for (k, &dof) in self.active.iter().enumerate() {
            q[dof] = params[2 * k];
        }
        q
    }

    /// Sampled trajectory for `params`.
    pub fn trajectory(
        &self,
        model: &BodyModel,
        params: &[f64],
        t_f: f64,
        step: f64,
    ) -> Result<JointTrajectory> {
        eval_trajectory(&self.coefficients(model, params, t_f)?, t_f, step)
    }
}
