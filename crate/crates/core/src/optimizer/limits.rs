use crate::body_model::BodyModel;
use crate::controller::{JointTrajectory, ParamLayout};

/// Clamps every final-angle parameter into its joint range. `p6` entries
/// are left alone.
pub fn clamp_final_angles(model: &BodyModel, layout: &ParamLayout, params: &mut [f64]) {
    for (k, &dof) in layout.active().iter().enumerate() {
        let i = ParamLayout::theta_f_index(k);
        params[i] = model.dof(dof).clamp(params[i]);
    }
}

/// `weight * sum over samples and DoF of max(0, theta - upper, lower - theta)^2`
/// (deg^2 before weighting).
pub fn limit_penalty(model: &BodyModel, traj: &JointTrajectory, weight: f64) -> f64 {
    let mut total = 0.0;
    for q in &traj.theta {
        for (i, &angle) in q.iter().enumerate() {
            let d = model.dof(i);
            let excess = (angle - d.upper).max(d.lower - angle).max(0.0);
            total += excess * excess;
        }
    }
    weight * total
}
