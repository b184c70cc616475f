//! Recursive Newton-Euler inverse dynamics over the segment tree.
//!
//! Velocities and accelerations propagate outward from the fixed base;
//! forces and moments accumulate inward. Gravity enters as an upward
//! acceleration of the base. Each Euler angle of a joint contributes one
//! motion axis, so the returned torques are the generalized forces
//! conjugate to the joint angles (their inner product with the angle rates
//! in rad/s is mechanical power). Passive stiffness and damping are added
//! per DoF on top of the rigid-body torques.

use nalgebra::{Rotation3, Vector3};

use crate::body_model::{BodyModel, JointSpec};
use crate::controller::JointTrajectory;
use crate::kinematics::{axis_sequence, check_posture};
use crate::{rad, Error, Result};

/// Torques and positions at a single sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDynamics {
    /// N m per DoF.
    pub torques: Vec<f64>,
    pub end_effector: Vector3<f64>,
    pub com: Vector3<f64>,
}

/// Per-sample results of a movement and its integral measures.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsOutput {
    pub times: Vec<f64>,
    /// `torques[k][i]`, N m.
    pub torques: Vec<Vec<f64>>,
    /// Per-DoF power `tau * theta_dot`, W.
    pub power: Vec<Vec<f64>>,
    /// `sum |tau_i theta_dot_i|`, W.
    pub total_abs_power: Vec<f64>,
    pub com: Vec<Vector3<f64>>,
    pub end_effector: Vec<Vector3<f64>>,
    /// Trapezoid integral of the squared power vector, J^2 (per second).
    pub total_power_squared: f64,
    /// Squared COM displacement between the first and last sample, m^2.
    pub final_com_squared: f64,
}

impl DynamicsOutput {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// COM displacement from the first sample at every sample.
    pub fn com_displacement(&self) -> Vec<Vector3<f64>> {
        let c0 = self.com[0];
        self.com.iter().map(|c| c - c0).collect()
    }

    /// Trapezoid integral of the total absolute power, J.
    pub fn total_energy(&self) -> f64 {
        trapezoid(&self.times, &self.total_abs_power)
    }
}

/// Fixed-order trapezoid rule.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Passive joint torque `K (theta - neutral) + B theta_dot` per plane.
/// Angles in deg, rates in deg/s, result in N m.
pub fn viscoelastic_torque(
    joint: &JointSpec,
    neutral: [f64; 3],
    theta: [f64; 3],
    theta_dot: [f64; 3],
) -> [f64; 3] {
    std::array::from_fn(|k| {
        let d = &joint.dofs[k];
        d.stiffness * (theta[k] - neutral[k]) + d.damping * theta_dot[k]
    })
}

/// Per-DoF power (W) and the sum of absolute powers. Rates in deg/s.
pub fn joint_power(torques: &[f64], theta_dot: &[f64]) -> Result<(Vec<f64>, f64)> {
    if torques.len() != theta_dot.len() {
        return Err(Error::Contract(format!(
            "torque vector has {} entries, rate vector {}",
            torques.len(),
            theta_dot.len()
        )));
    }
    let power: Vec<f64> = torques
        .iter()
        .zip(theta_dot)
        .map(|(t, w)| t * rad(*w))
        .collect();
    let total = power.iter().map(|p| p.abs()).sum();
    Ok((power, total))
}

/// Joint torques for one state (deg, deg/s, deg/s^2), including gravity and
/// passive viscoelasticity.
pub fn inverse_dynamics(
    model: &BodyModel,
    theta: &[f64],
    theta_dot: &[f64],
    theta_ddot: &[f64],
) -> Result<Vec<f64>> {
    check_posture(model, theta, "joint angles")?;
    check_posture(model, theta_dot, "joint velocities")?;
    check_posture(model, theta_ddot, "joint accelerations")?;
    Ok(rnea(model, theta, theta_dot, theta_ddot).torques)
}

/// Unchecked recursive Newton-Euler pass. Also returns end-effector and COM.
pub(crate) fn rnea(model: &BodyModel, q: &[f64], qd: &[f64], qdd: &[f64]) -> SampleDynamics {
    let n = model.segments().len();
    let mut rot = vec![Rotation3::identity(); n];
    let mut origin = vec![Vector3::zeros(); n];
    let mut omega = vec![Vector3::zeros(); n];
    let mut alpha = vec![Vector3::zeros(); n];
    let mut acc = vec![Vector3::zeros(); n];
    // world-frame motion axes and signs per joint, for the torque projection
    let mut axes = vec![[(Vector3::zeros(), 0usize, 0.0); 3]; model.joints().len()];
    let mut force = vec![Vector3::zeros(); n];
    let mut moment = vec![Vector3::zeros(); n];
    let mut com_world = vec![Vector3::zeros(); n];

    let base_acc = Vector3::new(0.0, 0.0, model.gravity());

    for &j in model.joint_order() {
        let joint = &model.joints()[j];
        let c = model.child_segment(j);
        let (r_p, o_p, w_p, al_p, a_p) = match model.parent_segment(j) {
            Some(p) => (rot[p], origin[p], omega[p], alpha[p], acc[p]),
            None => (
                Rotation3::identity(),
                Vector3::zeros(),
                Vector3::zeros(),
                Vector3::zeros(),
                base_acc,
            ),
        };
        let r = r_p * joint.origin;
        origin[c] = o_p + r;
        acc[c] = a_p + al_p.cross(&r) + w_p.cross(&w_p.cross(&r));

        let mut frame = r_p;
        let mut w = w_p;
        let mut al = al_p;
        for (k, step) in axis_sequence(joint.reversed).iter().enumerate() {
            let slot = 3 * j + step.slot;
            let u = frame * step.axis.into_inner();
            let rate = step.sign * rad(qd[slot]);
            al += u * (step.sign * rad(qdd[slot])) + w.cross(&u) * rate;
            w += u * rate;
            frame *= Rotation3::from_axis_angle(&step.axis, step.sign * rad(q[slot]));
            axes[j][k] = (u, step.slot, step.sign);
        }
        rot[c] = frame;
        omega[c] = w;
        alpha[c] = al;

        let seg = &model.segments()[c];
        let rc = frame * seg.com_offset;
        com_world[c] = origin[c] + rc;
        let a_com = acc[c] + al.cross(&rc) + w.cross(&w.cross(&rc));
        let inertia = frame.matrix() * seg.inertia * frame.matrix().transpose();
        force[c] = a_com * seg.mass;
        moment[c] = inertia * al + w.cross(&(inertia * w)) + rc.cross(&force[c]);
    }

    let mut torques = vec![0.0; model.dof_count()];
    let neutral = model.neutral_posture();
    for &j in model.joint_order().iter().rev() {
        let c = model.child_segment(j);
        for &(u, slot, sign) in &axes[j] {
            torques[3 * j + slot] = sign * moment[c].dot(&u);
        }
        let joint = &model.joints()[j];
        let passive = viscoelastic_torque(
            joint,
            [neutral[3 * j], neutral[3 * j + 1], neutral[3 * j + 2]],
            [q[3 * j], q[3 * j + 1], q[3 * j + 2]],
            [qd[3 * j], qd[3 * j + 1], qd[3 * j + 2]],
        );
        for k in 0..3 {
            torques[3 * j + k] += passive[k];
        }
        if let Some(p) = model.parent_segment(j) {
            let lever = origin[c] - origin[p];
            let (f, m) = (force[c], moment[c]);
            force[p] += f;
            moment[p] += m + lever.cross(&f);
        }
    }

    let ee_seg = model.end_effector_segment();
    let end_effector = origin[ee_seg] + rot[ee_seg] * model.segments()[ee_seg].distal_point();
    let mut mass = 0.0;
    let mut weighted = Vector3::zeros();
    for (s, c) in model.segments().iter().zip(&com_world) {
        weighted += s.mass * c;
        mass += s.mass;
    }
    SampleDynamics {
        torques,
        end_effector,
        com: weighted / mass,
    }
}

/// Runs inverse dynamics at every sample and integrates power and COM
/// measures with the trapezoid rule.
pub fn evaluate_movement(model: &BodyModel, traj: &JointTrajectory) -> Result<DynamicsOutput> {
    if traj.is_empty() {
        return Err(Error::Contract("empty trajectory".into()));
    }
    if traj.dof_count() != model.dof_count() {
        return Err(Error::Contract(format!(
            "trajectory has {} DoF, model has {}",
            traj.dof_count(),
            model.dof_count()
        )));
    }
    let n = traj.len();
    let mut out = DynamicsOutput {
        times: traj.times.clone(),
        torques: Vec::with_capacity(n),
        power: Vec::with_capacity(n),
        total_abs_power: Vec::with_capacity(n),
        com: Vec::with_capacity(n),
        end_effector: Vec::with_capacity(n),
        total_power_squared: 0.0,
        final_com_squared: 0.0,
    };
    let mut power_sq = Vec::with_capacity(n);
    for k in 0..n {
        let (q, qd, qdd) = (&traj.theta[k], &traj.theta_dot[k], &traj.theta_ddot[k]);
        if let Some(i) = q.iter().chain(qd).chain(qdd).position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite trajectory value at sample {k}, DoF {}",
                model.dof_name(i % model.dof_count())
            )));
        }
        let s = rnea(model, q, qd, qdd);
        let (power, total) = joint_power(&s.torques, qd)?;
        power_sq.push(power.iter().map(|p| p * p).sum::<f64>());
        out.torques.push(s.torques);
        out.power.push(power);
        out.total_abs_power.push(total);
        out.com.push(s.com);
        out.end_effector.push(s.end_effector);
    }
    out.total_power_squared = trapezoid(&out.times, &power_sq);
    out.final_com_squared = (out.com[n - 1] - out.com[0]).norm_squared();
    Ok(out)
}
